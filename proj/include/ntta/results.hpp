// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ntta/experiment.hpp"

namespace ntta {

/// Writes `contents` to a temporary sibling of `path` and renames it into
/// place. Throws IoError naming the path.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Per-cell CSV. Leading "# " lines hold the resolved config (YAML), then a
/// header and one row per (group, seed) in fixed column order:
///
///   method, group, sweep_axis, sweep_value, seed, samples, status,
///   target_reward, <held-out names...>, phi_drift, off_manifold_rate,
///   denoiser_passes, reward_evals, expected_denoiser_passes,
///   expected_reward_evals, wall_seconds, error
///
/// Trailing "# summary" lines carry the per-group means and standard errors.
/// Floats use 17 significant digits.
std::string results_csv(const ExperimentResult& result);

/// JSON document with library_version, config (the resolved configuration),
/// held_out_names, cells and groups.
std::string results_json(const ExperimentResult& result);

/// format is "csv" or "json".
void emit_results(const ExperimentResult& result, const std::string& format,
                  const std::filesystem::path& path);

/// One row per timestep of a single alignment run (t, lambda2_t,
/// inner_steps, objective_start, objective, reward, kl_transition,
/// kl_embedding, phi_drift, selected, selected_reward) behind the same
/// "# " config echo as results_csv. A trailing "# x0:" line holds the sample.
std::string trajectory_csv(const ExperimentConfig& config, const AlignmentResult& run);
std::string trajectory_json(const ExperimentConfig& config, const AlignmentResult& run);

struct ParetoRow {
  std::string method;
  std::string sweep_label;
  MeanSe target;
  std::vector<MeanSe> held_out;
  bool dominated = false;
};

/// One row per (method result, sweep group). A row is dominated when some
/// other row is >= on the target and every held-out mean and strictly greater
/// on at least one of them. Throws ConfigError when the results do not share
/// the same held-out battery.
std::vector<ParetoRow> pareto_rows(const std::vector<ExperimentResult>& results);

/// CSV of pareto_rows(): method, sweep_value, target_mean, target_se,
/// <name>_mean, <name>_se per held-out reward, dominated.
void emit_pareto_data(const std::vector<ExperimentResult>& results,
                      const std::filesystem::path& path);

}  // namespace ntta
