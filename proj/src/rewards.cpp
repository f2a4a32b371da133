// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "ntta/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "ntta/errors.hpp"

namespace ntta {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_dim(const Vec& a, const Vec& x) {
  if (a.size() != x.size()) throw ShapeError("reward parameter dimension does not match point");
}

}  // namespace

bool RewardSpec::differentiable() const {
  return std::visit(Overloaded{
                        [](const QuantizedCodeLength&) { return false; },
                        [](const WeightedCombo& c) {
                          return c.a->differentiable() && c.b->differentiable();
                        },
                        [](const auto&) { return true; },
                    },
                    kind);
}

int RewardSpec::depth() const {
  if (const auto* c = std::get_if<WeightedCombo>(&kind)) {
    return 1 + std::max(c->a->depth(), c->b->depth());
  }
  return 1;
}

void RewardSpec::validate() const {
  std::visit(Overloaded{
                 [](const TargetMode& r) {
                   if (r.target.size() == 0 || !r.target.allFinite())
                     throw ConfigError("target_mode needs a finite target");
                 },
                 [](const LinearScore& r) {
                   if (r.weights.size() == 0 || !r.weights.allFinite())
                     throw ConfigError("linear_score needs finite weights");
                 },
                 [](const RadialBand& r) {
                   if (!(r.width > 0.0) || !std::isfinite(r.radius))
                     throw ConfigError("radial_band needs width > 0");
                 },
                 [](const QuantizedCodeLength& r) {
                   if (!(r.cell > 0.0) || !std::isfinite(r.cell))
                     throw ConfigError("quantized_code_length needs cell > 0");
                 },
                 [](const WeightedCombo& r) {
                   if (!(r.weight >= 0.0 && r.weight <= 1.0))
                     throw ConfigError("weighted_combo weight must lie in [0, 1]");
                   if (!r.a || !r.b) throw ConfigError("weighted_combo needs two children");
                   r.a->validate();
                   r.b->validate();
                 },
             },
             kind);
  if (depth() > 2) throw ConfigError("reward nesting depth exceeds 2");
}

std::string RewardSpec::describe() const {
  std::ostringstream os;
  os.precision(6);
  auto vec = [&](const Vec& v) {
    os << '[';
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << ']';
  };
  std::visit(Overloaded{
                 [&](const TargetMode& r) { os << "target_mode"; vec(r.target); },
                 [&](const LinearScore& r) { os << "linear_score"; vec(r.weights); },
                 [&](const RadialBand& r) { os << "radial_band(" << r.radius << "," << r.width << ')'; },
                 [&](const QuantizedCodeLength& r) { os << "quantized_code_length(" << r.cell << ')'; },
                 [&](const WeightedCombo& r) {
                   os << "weighted_combo(" << r.weight << "," << r.a->describe() << ","
                      << r.b->describe() << ')';
                 },
             },
             kind);
  return os.str();
}

RewardSpec make_combo(double weight, RewardSpec a, RewardSpec b) {
  return RewardSpec{WeightedCombo{weight, std::make_shared<const RewardSpec>(std::move(a)),
                                  std::make_shared<const RewardSpec>(std::move(b))}};
}

double evaluate(const RewardSpec& spec, const Vec& x) {
  return std::visit(
      Overloaded{
          [&](const TargetMode& r) {
            check_dim(r.target, x);
            return -(x - r.target).squaredNorm();
          },
          [&](const LinearScore& r) {
            check_dim(r.weights, x);
            return r.weights.dot(x);
          },
          [&](const RadialBand& r) {
            const double u = (x.norm() - r.radius) / r.width;
            return -u * u;
          },
          [&](const QuantizedCodeLength& r) {
            std::set<double> symbols;
            for (double xi : x) {
              const double q = std::round(xi / r.cell);  // half away from zero
              if (q != 0.0) symbols.insert(q);
            }
            return -static_cast<double>(symbols.size());
          },
          [&](const WeightedCombo& r) {
            return r.weight * evaluate(*r.a, x) + (1.0 - r.weight) * evaluate(*r.b, x);
          },
      },
      spec.kind);
}

Vec reward_gradient(const RewardSpec& spec, const Vec& x) {
  return std::visit(
      Overloaded{
          [&](const TargetMode& r) -> Vec {
            check_dim(r.target, x);
            return -2.0 * (x - r.target);
          },
          [&](const LinearScore& r) -> Vec {
            check_dim(r.weights, x);
            return r.weights;
          },
          [&](const RadialBand& r) -> Vec {
            const double n = x.norm();
            if (n == 0.0) return Vec::Zero(x.size());
            const double u = (n - r.radius) / r.width;
            return (-2.0 * u / (r.width * n)) * x;
          },
          [&](const QuantizedCodeLength&) -> Vec {
            throw ModeError("quantized_code_length has no analytic gradient; use zeroth-order mode");
          },
          [&](const WeightedCombo& r) -> Vec {
            return r.weight * reward_gradient(*r.a, x) + (1.0 - r.weight) * reward_gradient(*r.b, x);
          },
      },
      spec.kind);
}

}  // namespace ntta
