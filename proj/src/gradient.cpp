// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "ntta/gradient.hpp"

#include <exception>
#include <string>

#include "ntta/errors.hpp"

namespace ntta {

void ZerothOrderGradient::validate() const {
  if (!(mu > 0.0)) throw ConfigError("zeroth-order mu must be positive");
  if (num_samples < 1) throw ConfigError("zeroth-order num_samples must be >= 1");
}

Vec analytic_gradient(const Objective& objective, const Vec& phi) {
  if (!objective.differentiable()) {
    throw ModeError("objective is not differentiable; select zeroth-order gradient mode");
  }
  Vec grad = Vec::Zero(phi.size());
  objective.value_and_gradient(phi, grad);
  return grad;
}

namespace {

double checked_eval(const Objective& objective, const Vec& phi, int index) {
  try {
    return objective.value(phi);
  } catch (const std::exception& e) {
    throw ObjectiveError("objective evaluation failed at perturbation " + std::to_string(index) +
                             ": " + e.what(),
                         index);
  }
}

}  // namespace

int zo_evaluations(const ZerothOrderGradient& mode) {
  return mode.antithetic ? 2 * mode.num_samples + 1 : mode.num_samples + 1;
}

ZerothOrderEstimate zo_estimate(const Objective& objective, const Vec& phi,
                                const ZerothOrderGradient& mode, std::mt19937_64& rng) {
  mode.validate();
  std::normal_distribution<double> normal(0.0, 1.0);
  ZerothOrderEstimate est{Vec::Zero(phi.size()), checked_eval(objective, phi, -1), 1};
  Vec v(phi.size());
  for (int k = 0; k < mode.num_samples; ++k) {
    for (auto& vi : v) vi = normal(rng);
    double diff = 0.0;
    if (mode.antithetic) {
      diff = 0.5 * (checked_eval(objective, phi + mode.mu * v, k) -
                    checked_eval(objective, phi - mode.mu * v, k));
      est.evaluations += 2;
    } else {
      diff = checked_eval(objective, phi + mode.mu * v, k) - est.base_value;
      est.evaluations += 1;
    }
    est.gradient += diff * v;
  }
  est.gradient /= mode.num_samples * mode.mu;
  return est;
}

Vec zo_gradient(const Objective& objective, const Vec& phi, const ZerothOrderGradient& mode) {
  std::mt19937_64 rng(mode.seed);
  return zo_estimate(objective, phi, mode, rng).gradient;
}

}  // namespace ntta
