// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ntta/align.hpp"
#include "ntta/baselines.hpp"
#include "ntta/checkpoint.hpp"
#include "ntta/dataset.hpp"
#include "ntta/rewards.hpp"
#include "ntta/training.hpp"

namespace ntta {

struct DatasetConfig {
  std::string kind = "ring";  // ring | grid | gaussian_mixture
  int modes = 8;
  double radius = 2.0;
  double stddev = 0.15;
  int classes = 4;
  int side = 3;          // grid only
  double spacing = 1.0;  // grid only
  std::vector<MixtureComponent> components;  // gaussian_mixture only
  int samples_per_class = 4000;
  std::uint64_t seed = 1;

  DatasetSpec to_spec() const;
};

struct ModelConfig {
  /// Loaded when set and present on disk; otherwise the model is trained.
  std::string checkpoint;
  std::uint64_t init_seed = 7;
  DenoiserArch arch{};
  ScheduleParams schedule{};
  TrainConfig training{};
};

/// Parameters of every baseline; the method picks which ones apply.
struct BaselineParams {
  int n = 4;           // best_of_n
  double zeta = 0.1;   // step_guidance
  int steps = 20;      // noise_opt
  double rate = 0.1;   // noise_opt
};

enum class Method { NullTta, Unaligned, BestOfN, StepGuidance, NoiseOpt };

std::string to_string(Method method);
Method method_from_string(const std::string& name);

enum class SweepAxis { None, NMax, Particles, Gamma, Lambda, Weight, Zeta, NoiseSteps, BestOfN };

std::string to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(const std::string& name);

struct SweepConfig {
  SweepAxis axis = SweepAxis::None;
  /// One entry per sweep group; the lambda axis takes (lambda1, lambda2,
  /// sigma_phi_sq) triples, every other axis a single number.
  std::vector<std::vector<double>> values;

  std::size_t groups() const { return axis == SweepAxis::None ? 1 : values.size(); }
  std::string label(std::size_t group) const;
};

struct ExperimentConfig {
  std::string name = "experiment";
  Method method = Method::NullTta;
  int label = 0;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  int samples = 1;  // final samples per (group, seed) cell

  DatasetConfig dataset{};
  ModelConfig model{};
  AlignmentConfig alignment{};
  BaselineParams baseline{};

  NamedReward target{};
  std::vector<NamedReward> held_out;

  SweepConfig sweep{};

  std::string output_dir = "results";
  std::string format = "csv";
  int threads = 0;  // 0 = hardware concurrency

  void validate() const;
  bool is_baseline() const { return method != Method::NullTta; }
  /// Baseline configuration for this method; guidance scale comes from
  /// alignment.guidance_scale.
  BaselineConfig baseline_config(std::uint64_t seed) const;
  /// Copy with the sweep value of `group` applied (and the sweep cleared).
  ExperimentConfig for_group(std::size_t group) const;
};

/// Default experiment: 8-mode ring in 4 classes, class 0 aligned towards the
/// centre of mode 1, held-out battery {mode 0 target, linear score, radial band}.
ExperimentConfig default_experiment();

/// "section.key=value" pairs applied on top of a file.
using Overrides = std::map<std::string, std::string>;

/// Parses a YAML document (JSON result files parse too; their "config"
/// member is used). Errors are ConfigErrors prefixed "<source>:<line>:<col>:".
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<string>",
                              const Overrides& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});

/// Canonical YAML of the fully resolved configuration; parse_config() of the
/// output reproduces `config` exactly.
std::string dump_config(const ExperimentConfig& config);

/// Parses a reward spec written as a YAML mapping, e.g.
/// "{type: target_mode, target: [1, 2]}". Used for tests and the CLI.
RewardSpec parse_reward(const std::string& text, const DatasetConfig& dataset = {});

}  // namespace ntta
