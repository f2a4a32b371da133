// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <variant>

#include "ntta/diffusion.hpp"

namespace ntta {

struct AnalyticGradient {};

/// Forward-difference random-direction estimator
///   g = 1/(K mu) * sum_k [J(phi + mu v_k) - J(phi)] v_k,  v_k ~ N(0, I).
/// With `antithetic` the symmetric form [J(phi + mu v) - J(phi - mu v)] / 2 is used.
struct ZerothOrderGradient {
  double mu = 0.02;
  int num_samples = 4;
  std::uint64_t seed = 0;
  bool antithetic = false;

  void validate() const;
};

using GradientMode = std::variant<AnalyticGradient, ZerothOrderGradient>;

/// Scalar objective of an embedding vector. `value_and_gradient` is left
/// empty when some part of the computation is not differentiable.
struct Objective {
  std::function<double(const Vec&)> value;
  std::function<double(const Vec&, Vec&)> value_and_gradient;

  bool differentiable() const { return static_cast<bool>(value_and_gradient); }
};

/// Exact gradient via the objective's reverse-mode path. Throws ModeError
/// when the objective has none.
Vec analytic_gradient(const Objective& objective, const Vec& phi);

struct ZerothOrderEstimate {
  Vec gradient;
  double base_value = 0.0;
  int evaluations = 0;
};

/// Draws the directions from `rng`; performs num_samples + 1 evaluations
/// (2 num_samples + 1 when antithetic). An exception thrown by the
/// objective is rethrown as ObjectiveError carrying the perturbation index.
ZerothOrderEstimate zo_estimate(const Objective& objective, const Vec& phi,
                                const ZerothOrderGradient& mode, std::mt19937_64& rng);

/// Same estimator with directions drawn from a generator seeded by mode.seed.
Vec zo_gradient(const Objective& objective, const Vec& phi, const ZerothOrderGradient& mode);

/// Number of objective evaluations one zo_estimate() call makes.
int zo_evaluations(const ZerothOrderGradient& mode);

}  // namespace ntta
