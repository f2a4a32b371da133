// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>

#include "ntta/denoiser.hpp"

namespace ntta {

inline constexpr std::string_view kCheckpointMagic = "NTTA-CKPT-v1";

struct ScheduleParams {
  int total_steps = 100;
  double beta_start = 1e-3;
  double beta_end = 0.2;
  bool operator==(const ScheduleParams&) const = default;
};

struct TrainingMetadata {
  std::uint64_t steps = 0;
  std::uint64_t seed = 0;
  double final_loss = 0.0;
  bool operator==(const TrainingMetadata&) const = default;
};

struct Checkpoint {
  DenoiserModel model;
  ScheduleParams schedule;
  TrainingMetadata training;
};

/// Binary layout, all integers and floats little-endian:
///
///   char[12]  magic "NTTA-CKPT-v1"
///   u32 x 7   data_dim, embed_dim, hidden_width, hidden_layers,
///             time_frequencies, num_classes, model total_steps
///   u32       schedule total_steps
///   f64 x 2   beta_start, beta_end
///   u64 x 2   training steps, training seed
///   f64       final training loss
///   u64       payload length n (number of f64 values)
///   f64 x n   flat model parameters (see DenoiserModel)
///
/// The file is written to a temporary sibling and renamed into place.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);

/// Throws CheckpointError on wrong magic/version or a short payload and
/// IoError when the file cannot be read.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ntta
