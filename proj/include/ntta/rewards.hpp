// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "ntta/diffusion.hpp"

namespace ntta {

struct RewardSpec;

/// R(x) = -||x - target||^2
struct TargetMode {
  Vec target;
};

/// R(x) = a . x
struct LinearScore {
  Vec weights;
};

/// R(x) = -((||x|| - radius) / width)^2
struct RadialBand {
  double radius = 0.0;
  double width = 1.0;
};

/// R(x) = -(number of distinct nonzero values among the quantised
/// coordinates round(x_i / cell)), rounding half away from zero.
/// Piecewise constant, so it has no usable gradient.
struct QuantizedCodeLength {
  double cell = 1.0;
};

/// R = w R_a + (1 - w) R_b
struct WeightedCombo {
  double weight = 0.5;
  std::shared_ptr<const RewardSpec> a;
  std::shared_ptr<const RewardSpec> b;
};

struct RewardSpec {
  std::variant<TargetMode, LinearScore, RadialBand, QuantizedCodeLength, WeightedCombo> kind;

  bool differentiable() const;
  /// 1 for a leaf, 1 + max child depth for a combination.
  int depth() const;
  /// Throws ConfigError if parameters are out of range or nesting exceeds 2.
  void validate() const;
  std::string describe() const;
};

RewardSpec make_combo(double weight, RewardSpec a, RewardSpec b);

double evaluate(const RewardSpec& spec, const Vec& x);

/// Analytic gradient; throws ModeError for non-differentiable specs.
Vec reward_gradient(const RewardSpec& spec, const Vec& x);

/// A reward with a display name, used for held-out batteries.
struct NamedReward {
  std::string name;
  RewardSpec spec;
};

}  // namespace ntta
