// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ntta/checkpoint.hpp"
#include "ntta/config.hpp"

namespace ntta {

inline constexpr const char* kLibraryVersion = "0.1.0";

/// One (sweep group, seed) cell. Reward and drift figures are means over the
/// cell's samples.
struct CellResult {
  std::size_t group = 0;
  std::uint64_t seed = 0;
  int samples = 0;
  double target_reward = 0.0;
  std::vector<double> held_out;  // same order as ExperimentResult::held_out_names
  double phi_drift = 0.0;        // ||phi' - phi||, 0 for baselines
  double off_manifold_rate = 0.0;
  long denoiser_passes = 0;
  long reward_evals = 0;
  long expected_denoiser_passes = 0;
  long expected_reward_evals = 0;
  double wall_seconds = 0.0;
  bool failed = false;
  std::string error;
  std::vector<Vec> finals;
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // standard error over seeds
};

struct GroupSummary {
  std::size_t group = 0;
  std::string sweep_label;
  std::vector<double> sweep_value;
  int completed = 0;
  MeanSe target;
  std::vector<MeanSe> held_out;
  MeanSe phi_drift;
  MeanSe off_manifold_rate;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<std::string> held_out_names;
  std::vector<CellResult> cells;  // ordered by (group, seed position)
  std::vector<GroupSummary> groups;
  std::string library_version = kLibraryVersion;

  bool any_failed() const;
};

/// Loads config.model.checkpoint when it names an existing file, otherwise
/// trains on the configured dataset.
Checkpoint prepare_model(const ExperimentConfig& config);

MeanSe mean_se(const std::vector<double>& values);

/// Runs every (sweep group, seed) cell against `model`. Cells run
/// concurrently; a cell that throws is recorded as failed and the rest
/// continue. Deterministic in the configuration.
ExperimentResult run_cells(const ExperimentConfig& config, const Checkpoint& model);

/// prepare_model, run_cells, then writes the results to
/// <output_dir>/<name>.<format> before returning.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace ntta
