// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstring>
#include <filesystem>

#include "ntta/denoiser.hpp"
#include "ntta/diffusion.hpp"

namespace ntta::testing {

/// Untrained two-class denoiser over 20 steps; cheap enough for exhaustive checks.
inline DenoiserModel small_model(std::uint64_t seed = 3) {
  DenoiserArch a;
  a.embed_dim = 8;
  a.hidden_width = 24;
  a.hidden_layers = 2;
  a.num_classes = 2;
  a.total_steps = 20;
  return DenoiserModel(a, seed);
}

inline NoiseSchedule small_schedule() { return build_schedule(20, 1e-3, 0.2); }

inline bool bitwise_equal(const Vec& a, const Vec& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "ntta-unit" / name;
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace ntta::testing
