// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>

#include "ntta/denoiser.hpp"

namespace ntta {

struct EvalCounters {
  long denoiser_passes = 0;  // forward and backward passes both count
  long reward_evals = 0;     // reward values and reward gradients both count
  bool operator==(const EvalCounters&) const = default;
};

/// Guided noise eps_u + s (eps_c - eps_u) from two single-sample passes.
Vec cfg_noise(const DenoiserModel& model, const LatentState& state, const Vec& uncond_embedding,
              const Vec& cond_embedding, double scale);

/// d_x standard-normal draws.
Vec standard_normal(std::mt19937_64& rng, Eigen::Index dim);

/// Reverse-step noise for a transition out of timestep t: a fresh draw for
/// t >= 2 and zeros at t = 1, where the final step is deterministic.
Vec transition_noise(std::mt19937_64& rng, int t, Eigen::Index dim);

/// Vector-Jacobian product of the guided clean estimate x0_hat(x) w.r.t. x:
/// returns (d x0_hat / d x)^T * upstream. Costs four denoiser passes.
Vec tweedie_vjp(const DenoiserModel& model, const NoiseSchedule& sched, const LatentState& state,
                const Vec& uncond_embedding, const Vec& cond_embedding, double scale,
                const Vec& upstream);

}  // namespace ntta
