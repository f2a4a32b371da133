// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "ntta/diffusion.hpp"

#include <cmath>
#include <string>

#include "ntta/errors.hpp"

namespace ntta {

namespace {

void check_same_dim(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  }
}

}  // namespace

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) {
  if (betas.empty()) throw ConfigError("noise schedule needs at least one step");
  NoiseSchedule s;
  s.betas_.reserve(betas.size() + 1);
  s.alphas_.reserve(betas.size() + 1);
  s.alpha_bars_.reserve(betas.size() + 1);
  s.betas_.push_back(0.0);
  s.alphas_.push_back(1.0);
  s.alpha_bars_.push_back(1.0);
  for (double b : betas) {
    if (!(b > 0.0 && b < 1.0)) {
      throw ConfigError("beta must lie in (0, 1), got " + std::to_string(b));
    }
    const double a = 1.0 - b;
    s.betas_.push_back(b);
    s.alphas_.push_back(a);
    s.alpha_bars_.push_back(a * s.alpha_bars_.back());
  }
  return s;
}

void NoiseSchedule::check_step(int t) const {
  if (t < 1 || t > total_steps()) {
    throw RangeError("timestep " + std::to_string(t) + " outside [1, " +
                     std::to_string(total_steps()) + "]");
  }
}

double NoiseSchedule::beta(int t) const {
  check_step(t);
  return betas_[t];
}

double NoiseSchedule::alpha(int t) const {
  check_step(t);
  return alphas_[t];
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 0 || t > total_steps()) {
    throw RangeError("timestep " + std::to_string(t) + " outside [0, " +
                     std::to_string(total_steps()) + "]");
  }
  return alpha_bars_[t];
}

double NoiseSchedule::sigma(int t) const { return std::sqrt(beta(t)); }

NoiseSchedule build_schedule(int total_steps, double beta_start, double beta_end) {
  if (total_steps < 1) throw ConfigError("total_steps must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw ConfigError("need 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(static_cast<std::size_t>(total_steps));
  if (total_steps == 1) {
    betas[0] = beta_start;
  } else {
    const double step = (beta_end - beta_start) / static_cast<double>(total_steps - 1);
    for (int i = 0; i < total_steps; ++i) betas[i] = beta_start + step * i;
    betas.back() = beta_end;
  }
  return NoiseSchedule::from_betas(std::move(betas));
}

LatentState forward_diffuse(const Vec& x0, int t, const Vec& eps, const NoiseSchedule& sched) {
  check_same_dim(x0, eps, "forward_diffuse");
  const double ab = sched.alpha_bar(t);
  return LatentState{std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps, t};
}

Vec cfg_combine(const Vec& eps_uncond, const Vec& eps_cond, double scale) {
  check_same_dim(eps_uncond, eps_cond, "cfg_combine");
  return eps_uncond + scale * (eps_cond - eps_uncond);
}

Vec tweedie_x0(const LatentState& state, const Vec& eps_tilde, const NoiseSchedule& sched) {
  check_same_dim(state.x, eps_tilde, "tweedie_x0");
  const double ab = sched.alpha_bar(state.t);
  if (state.t == 0) return state.x;
  if (!(ab > 0.0)) {
    throw DegenerateScheduleError("alpha_bar is zero at timestep " + std::to_string(state.t));
  }
  return (state.x - std::sqrt(1.0 - ab) * eps_tilde) / std::sqrt(ab);
}

Vec transition_mean(const LatentState& state, const Vec& x0_hat, const NoiseSchedule& sched) {
  check_same_dim(state.x, x0_hat, "transition_mean");
  const int t = state.t;
  if (t < 1 || t > sched.total_steps()) {
    throw RangeError("transition_mean needs 1 <= t <= T, got t = " + std::to_string(t));
  }
  const double ab = sched.alpha_bar(t);
  const double ab_prev = sched.alpha_bar(t - 1);
  const double coef_x0 = std::sqrt(ab_prev) * sched.beta(t) / (1.0 - ab);
  const double coef_xt = std::sqrt(sched.alpha(t)) * (1.0 - ab_prev) / (1.0 - ab);
  return coef_x0 * x0_hat + coef_xt * state.x;
}

LatentState ddpm_step(const LatentState& state, const Vec& eps_tilde, const Vec& noise,
                      const NoiseSchedule& sched) {
  check_same_dim(state.x, noise, "ddpm_step");
  const Vec mean = transition_mean(state, tweedie_x0(state, eps_tilde, sched), sched);
  return LatentState{mean + sched.sigma(state.t) * noise, state.t - 1};
}

double kl_transition_weight(const NoiseSchedule& sched, int t) {
  const double a = sched.alpha(t);
  return (1.0 - a) / (2.0 * a * (1.0 - sched.alpha_bar(t)));
}

double kl_transition(const Vec& eps_a, const Vec& eps_b, const NoiseSchedule& sched, int t) {
  check_same_dim(eps_a, eps_b, "kl_transition");
  return kl_transition_weight(sched, t) * (eps_a - eps_b).squaredNorm();
}

double kl_embedding(const Vec& phi_a, const Vec& phi_b, double sigma_phi_sq) {
  check_same_dim(phi_a, phi_b, "kl_embedding");
  if (!(sigma_phi_sq > 0.0)) throw ConfigError("sigma_phi_sq must be positive");
  return (phi_a - phi_b).squaredNorm() / (2.0 * sigma_phi_sq);
}

}  // namespace ntta
