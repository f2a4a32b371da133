// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "ntta/checkpoint.hpp"
#include "ntta/config.hpp"
#include "ntta/oracles.hpp"

namespace ntta {

/// Reference-run pins for the end-to-end checks.
struct AcceptancePins {
  /// Null-TTA must close at least this fraction of the gap between the
  /// unaligned mean target reward and the reward optimum (0).
  double target_gap_fraction = 0.5;
  double min_mode_share = 0.05;
  int coverage_samples = 2000;
  int seeds_end_to_end = 100;
  int seeds_intensity = 30;
  int seeds_particles = 200;
  int seeds_combo = 30;
  int seeds_tuning = 30;
  /// Step size of the noise-optimisation baseline while its step count M is
  /// tuned to Null-TTA's target reward.
  double noise_opt_rate = 1.0;
};

struct CriterionResult {
  std::string id;
  std::string title;
  bool pass = false;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  std::vector<std::string> details;
  std::vector<oracle::OracleReport> reports;
};

struct AcceptanceOptions {
  /// Reused when it exists; otherwise the reference model is trained and,
  /// if the path is non-empty, saved there.
  std::filesystem::path checkpoint;
  /// Scratch directory for A11 result files.
  std::filesystem::path work_dir = std::filesystem::temp_directory_path() / "ntta-selftest";
  std::set<std::string> only;  // empty = all criteria
  AcceptancePins pins{};
  int threads = 0;
};

/// The configuration the suite trains and aligns with.
ExperimentConfig acceptance_experiment();

/// Runs the criteria in order and prints one "PASS|FAIL <id> ..." line per
/// criterion to `out` (plus indented detail lines when `verbose`).
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options, std::ostream& out,
                                            bool verbose = true);

}  // namespace ntta
