// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "ntta/sampling.hpp"

#include <cmath>
#include <span>

namespace ntta {

Vec cfg_noise(const DenoiserModel& model, const LatentState& state, const Vec& uncond_embedding,
              const Vec& cond_embedding, double scale) {
  return cfg_combine(predict_noise(model, state, uncond_embedding),
                     predict_noise(model, state, cond_embedding), scale);
}

Vec standard_normal(std::mt19937_64& rng, Eigen::Index dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(dim);
  for (auto& e : v) e = normal(rng);
  return v;
}

Vec transition_noise(std::mt19937_64& rng, int t, Eigen::Index dim) {
  return t >= 2 ? standard_normal(rng, dim) : Vec::Zero(dim);
}

Vec tweedie_vjp(const DenoiserModel& model, const NoiseSchedule& sched, const LatentState& state,
                const Vec& uncond_embedding, const Vec& cond_embedding, double scale,
                const Vec& upstream) {
  const double ab = sched.alpha_bar(state.t);
  if (state.t == 0) return upstream;
  const std::span<const int> ts(&state.t, 1);
  DenoiserModel::Tape tape_u;
  DenoiserModel::Tape tape_c;
  model.forward(state.x, ts, uncond_embedding, &tape_u);
  model.forward(state.x, ts, cond_embedding, &tape_c);
  // x0 = (x - sqrt(1 - ab) eps~(x)) / sqrt(ab)
  const Vec g_eps = (-std::sqrt(1.0 - ab) / std::sqrt(ab)) * upstream;
  const Vec g_u = model.backward(tape_u, (1.0 - scale) * g_eps).x;
  const Vec g_c = model.backward(tape_c, scale * g_eps).x;
  return upstream / std::sqrt(ab) + g_u + g_c;
}

}  // namespace ntta
