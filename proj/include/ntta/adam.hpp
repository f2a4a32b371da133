// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ntta/diffusion.hpp"

namespace ntta {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam moment buffers for one flat parameter vector.
class Adam {
 public:
  Adam() = default;
  Adam(AdamConfig config, Eigen::Index size)
      : config_(config), m_(Vec::Zero(size)), v_(Vec::Zero(size)) {}

  /// Returns the step to add for ascent (+) or subtract for descent.
  Vec step(const Vec& grad);

  const AdamConfig& config() const { return config_; }
  long steps_taken() const { return t_; }
  void reset();

 private:
  AdamConfig config_;
  Vec m_;
  Vec v_;
  long t_ = 0;
};

}  // namespace ntta
