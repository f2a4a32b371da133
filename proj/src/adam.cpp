// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "ntta/adam.hpp"

#include <cmath>

#include "ntta/errors.hpp"

namespace ntta {

Vec Adam::step(const Vec& grad) {
  if (grad.size() != m_.size()) throw ShapeError("adam: gradient size mismatch");
  ++t_;
  m_ = config_.beta1 * m_ + (1.0 - config_.beta1) * grad;
  v_ = config_.beta2 * v_ + (1.0 - config_.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  return config_.learning_rate * (m_ / c1).array() / ((v_ / c2).array().sqrt() + config_.epsilon);
}

void Adam::reset() {
  m_.setZero();
  v_.setZero();
  t_ = 0;
}

}  // namespace ntta
