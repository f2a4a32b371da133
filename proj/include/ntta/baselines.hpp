// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <variant>

#include "ntta/denoiser.hpp"
#include "ntta/rewards.hpp"
#include "ntta/sampling.hpp"

namespace ntta {

struct Unaligned {};
struct BestOfN {
  int n = 4;
};
/// Adds zeta * clip(grad_x R(x0_hat(x_t))) to every reverse step, with the
/// gradient norm clipped to 1.
struct StepGuidance {
  double zeta = 0.1;
};
/// Gradient ascent on R(x_0) w.r.t. x_T and every injected transition noise,
/// back-propagated through the whole sampling chain.
struct NoiseOpt {
  int steps = 20;
  double rate = 0.1;
};

using BaselineVariant = std::variant<Unaligned, BestOfN, StepGuidance, NoiseOpt>;

struct BaselineConfig {
  BaselineVariant variant = Unaligned{};
  double guidance_scale = 3.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Plain guided ancestral sampling. Draws x_T then one noise vector per step
/// with t >= 2 from a generator seeded by `seed`.
Vec sample_unaligned(const DenoiserModel& model, const NoiseSchedule& sched, int label,
                     double guidance_scale, std::uint64_t seed, EvalCounters* counters = nullptr);

/// n unaligned samples drawn back to back from one seeded stream; returns the
/// highest-reward sample (lowest index on ties).
Vec best_of_n(const DenoiserModel& model, const NoiseSchedule& sched, int label,
              double guidance_scale, int n, const RewardSpec& reward, std::uint64_t seed, EvalCounters* counters = nullptr);

Vec step_guidance_sample(const DenoiserModel& model, const NoiseSchedule& sched, int label,
                         double guidance_scale, double zeta, const RewardSpec& reward,
                         std::uint64_t seed, EvalCounters* counters = nullptr);

Vec noise_opt_sample(const DenoiserModel& model, const NoiseSchedule& sched, int label,
                     double guidance_scale, int steps, double rate, const RewardSpec& reward,
                     std::uint64_t seed, EvalCounters* counters = nullptr);

/// Dispatches on config.variant.
Vec run_baseline(const DenoiserModel& model, const NoiseSchedule& sched, int label,
                 const BaselineConfig& config, const RewardSpec& reward,
                 EvalCounters* counters = nullptr);

/// Closed-form evaluation budget of run_baseline. Unaligned: 2 passes per
/// step. Best-of-n: n chains plus n reward evals. Step guidance: 6 passes and
/// one reward gradient per step when zeta != 0. Noise optimisation: M + 1
/// forward chains plus M backward sweeps of 4 passes per step and M reward
/// gradients.
EvalCounters baseline_evaluations(const BaselineConfig& config, int total_steps);

}  // namespace ntta
