// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "ntta/baselines.hpp"

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "ntta/errors.hpp"
#include "ntta/sampling.hpp"

namespace ntta {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void count(EvalCounters* counters, long passes, long rewards) {
  if (counters) {
    counters->denoiser_passes += passes;
    counters->reward_evals += rewards;
  }
}

Vec run_chain(const DenoiserModel& model, const NoiseSchedule& sched, const Vec& x_T,
              const Vec& cond, double scale, std::mt19937_64& rng, EvalCounters* counters) {
  const Vec& phi = model.null_embedding();
  LatentState state{x_T, sched.total_steps()};
  while (state.t >= 1) {
    const Vec eps = cfg_noise(model, state, phi, cond, scale);
    count(counters, 2, 0);
    state = ddpm_step(state, eps, transition_noise(rng, state.t, state.x.size()), sched);
  }
  return state.x;
}

void require_differentiable(const RewardSpec& reward, const char* method) {
  if (!reward.differentiable()) {
    throw ModeError(std::string(method) + " needs a differentiable reward, got " + reward.describe());
  }
}

}  // namespace

void BaselineConfig::validate() const {
  if (!(guidance_scale >= 0.0)) throw ConfigError("guidance scale must be >= 0");
  std::visit(Overloaded{
                 [](const Unaligned&) {},
                 [](const BestOfN& b) {
                   if (b.n < 1) throw ConfigError("best_of_n needs n >= 1");
                 },
                 [](const StepGuidance& g) {
                   if (!std::isfinite(g.zeta)) throw ConfigError("step guidance zeta must be finite");
                 },
                 [](const NoiseOpt& o) {
                   if (o.steps < 0 || !std::isfinite(o.rate))
                     throw ConfigError("noise_opt needs steps >= 0 and a finite rate");
                 },
             },
             variant);
}

Vec sample_unaligned(const DenoiserModel& model, const NoiseSchedule& sched, int label,
                     double guidance_scale, std::uint64_t seed, EvalCounters* counters) {
  std::mt19937_64 rng(seed);
  const Vec x_T = standard_normal(rng, model.data_dim());
  return run_chain(model, sched, x_T, model.condition(label), guidance_scale, rng, counters);
}

Vec best_of_n(const DenoiserModel& model, const NoiseSchedule& sched, int label,
              double guidance_scale, int n, const RewardSpec& reward, std::uint64_t seed, EvalCounters* counters) {
  if (n < 1) throw ConfigError("best_of_n needs n >= 1");
  std::mt19937_64 rng(seed);
  const Vec cond = model.condition(label);
  Vec best;
  double best_r = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec x_T = standard_normal(rng, model.data_dim());
    Vec x = run_chain(model, sched, x_T, cond, guidance_scale, rng, counters);
    const double r = evaluate(reward, x);
    count(counters, 0, 1);
    if (i == 0 || r > best_r) {
      best_r = r;
      best = std::move(x);
    }
  }
  return best;
}

Vec step_guidance_sample(const DenoiserModel& model, const NoiseSchedule& sched, int label,
                         double guidance_scale, double zeta, const RewardSpec& reward,
                         std::uint64_t seed, EvalCounters* counters) {
  require_differentiable(reward, "step guidance");
  std::mt19937_64 rng(seed);
  const Vec& phi = model.null_embedding();
  const Vec cond = model.condition(label);
  LatentState state{standard_normal(rng, model.data_dim()), sched.total_steps()};
  while (state.t >= 1) {
    const Vec eps = cfg_noise(model, state, phi, cond, guidance_scale);
    count(counters, 2, 0);
    LatentState next = ddpm_step(state, eps, transition_noise(rng, state.t, state.x.size()), sched);
    if (zeta != 0.0) {
      const Vec x0_hat = tweedie_x0(state, eps, sched);
      Vec g = tweedie_vjp(model, sched, state, phi, cond, guidance_scale,
                          reward_gradient(reward, x0_hat));
      count(counters, 4, 1);
      const double norm = g.norm();
      if (norm > 1.0) g /= norm;
      next.x += zeta * g;
    }
    state = std::move(next);
  }
  return state.x;
}

Vec noise_opt_sample(const DenoiserModel& model, const NoiseSchedule& sched, int label,
                     double guidance_scale, int steps, double rate, const RewardSpec& reward,
                     std::uint64_t seed, EvalCounters* counters) {
  if (steps < 0) throw ConfigError("noise_opt needs steps >= 0");
  if (steps > 0) require_differentiable(reward, "noise optimisation");
  const int total = sched.total_steps();
  const Eigen::Index dim = model.data_dim();
  const Vec& phi = model.null_embedding();
  const Vec cond = model.condition(label);

  // noises[T] is x_T; noises[t] for t < T is the noise injected when leaving
  // timestep t + 1. Drawn in the same order as sample_unaligned.
  std::mt19937_64 rng(seed);
  std::vector<Vec> noises(total + 1);
  noises[total] = standard_normal(rng, dim);
  for (int t = total; t >= 1; --t) noises[t - 1] = transition_noise(rng, t, dim);

  std::vector<LatentState> path(total + 1);
  auto forward = [&]() {
    path[total] = LatentState{noises[total], total};
    for (int t = total; t >= 1; --t) {
      const Vec eps = cfg_noise(model, path[t], phi, cond, guidance_scale);
      count(counters, 2, 0);
      path[t - 1] = ddpm_step(path[t], eps, noises[t - 1], sched);
    }
    return path[0].x;
  };

  Vec x0 = forward();
  std::vector<Vec> grads(total + 1);
  for (int m = 0; m < steps; ++m) {
    // Reverse pass through x_{t-1} = c0 x0_hat(x_t) + c1 x_t + sigma_t z_t.
    Vec g = reward_gradient(reward, x0);
    count(counters, 0, 1);
    for (int t = 1; t <= total; ++t) {
      grads[t - 1] = t >= 2 ? Vec(sched.sigma(t) * g) : Vec(Vec::Zero(dim));
      const double ab = sched.alpha_bar(t);
      const double ab_prev = sched.alpha_bar(t - 1);
      const double c0 = std::sqrt(ab_prev) * sched.beta(t) / (1.0 - ab);
      const double c1 = std::sqrt(sched.alpha(t)) * (1.0 - ab_prev) / (1.0 - ab);
      g = tweedie_vjp(model, sched, path[t], phi, cond, guidance_scale, c0 * g) + c1 * g;
      count(counters, 4, 0);
    }
    grads[total] = g;
    for (int t = 0; t <= total; ++t) {
      if (!grads[t].allFinite()) throw AlignmentError("noise optimisation gradient diverged", t, m);
      noises[t] += rate * grads[t];
    }
    x0 = forward();
  }
  return x0;
}

Vec run_baseline(const DenoiserModel& model, const NoiseSchedule& sched, int label,
                 const BaselineConfig& config, const RewardSpec& reward,
                 EvalCounters* counters) {
  config.validate();
  const double s = config.guidance_scale;
  return std::visit(
      Overloaded{
          [&](const Unaligned&) { return sample_unaligned(model, sched, label, s, config.seed, counters); },
          [&](const BestOfN& b) { return best_of_n(model, sched, label, s, b.n, reward, config.seed, counters); },
          [&](const StepGuidance& g) {
            return step_guidance_sample(model, sched, label, s, g.zeta, reward, config.seed, counters);
          },
          [&](const NoiseOpt& o) {
            return noise_opt_sample(model, sched, label, s, o.steps, o.rate, reward, config.seed,
                                    counters);
          },
      },
      config.variant);
}

EvalCounters baseline_evaluations(const BaselineConfig& config, int total_steps) {
  const long T = total_steps;
  return std::visit(
      Overloaded{
          [&](const Unaligned&) { return EvalCounters{2 * T, 0}; },
          [&](const BestOfN& b) { return EvalCounters{2 * T * b.n, b.n}; },
          [&](const StepGuidance& g) {
            return g.zeta != 0.0 ? EvalCounters{6 * T, T} : EvalCounters{2 * T, 0};
          },
          [&](const NoiseOpt& o) {
            const long m = o.steps;
            return EvalCounters{2 * T * (m + 1) + 4 * T * m, m};
          },
      },
      config.variant);
}

}  // namespace ntta
