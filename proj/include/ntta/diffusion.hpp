// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include <Eigen/Dense>

namespace ntta {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Linear-beta DDPM noise schedule over timesteps 1..T.
///
/// Index 0 holds the conventional clean-data entry (alpha_bar_0 = 1) so that
/// alpha_bar(t - 1) is always valid for t in 1..T. The reverse-transition
/// variance is sigma_t^2 = beta_t, which makes the closed-form transition KL
/// in kl_transition() an exact same-covariance Gaussian KL.
class NoiseSchedule {
 public:
  /// Builds a schedule from explicit betas (betas[0] is timestep 1).
  static NoiseSchedule from_betas(std::vector<double> betas);

  int total_steps() const { return static_cast<int>(betas_.size()) - 1; }

  double beta(int t) const;
  double alpha(int t) const;
  /// Valid for t in [0, T]; alpha_bar(0) == 1.
  double alpha_bar(int t) const;
  double sigma_sq(int t) const { return beta(t); }
  double sigma(int t) const;

  double beta_start() const { return betas_[1]; }
  double beta_end() const { return betas_.back(); }

 private:
  NoiseSchedule() = default;
  void check_step(int t) const;

  // Entry 0 is a placeholder (beta_0 = 0, alpha_0 = 1).
  std::vector<double> betas_;
  std::vector<double> alphas_;
  std::vector<double> alpha_bars_;
};

/// A point in data space tagged with its diffusion timestep.
struct LatentState {
  Vec x;
  int t = 0;
};

struct GuidanceConfig {
  double scale = 1.0;
};

/// Linear betas from beta_start to beta_end inclusive.
/// Requires 0 < beta_start <= beta_end < 1 and T >= 1.
NoiseSchedule build_schedule(int total_steps, double beta_start, double beta_end);

/// sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps; t = 0 returns x0.
LatentState forward_diffuse(const Vec& x0, int t, const Vec& eps, const NoiseSchedule& sched);

/// eps_uncond + s * (eps_cond - eps_uncond).
Vec cfg_combine(const Vec& eps_uncond, const Vec& eps_cond, double scale);

/// Posterior-mean clean sample from a noise prediction. At t = 0 the state
/// is already clean and is returned as-is.
Vec tweedie_x0(const LatentState& state, const Vec& eps_tilde, const NoiseSchedule& sched);

/// Mean of the reverse transition p(x_{t-1} | x_t) given a clean estimate.
Vec transition_mean(const LatentState& state, const Vec& x0_hat, const NoiseSchedule& sched);

/// One ancestral step: transition mean plus sigma_t * noise. Callers pass a
/// zero noise vector at t = 1.
LatentState ddpm_step(const LatentState& state, const Vec& eps_tilde, const Vec& noise,
                      const NoiseSchedule& sched);

/// Closed-form KL between reverse transitions driven by two noise predictions.
double kl_transition(const Vec& eps_a, const Vec& eps_b, const NoiseSchedule& sched, int t);

/// Coefficient (1 - alpha_t) / (2 alpha_t (1 - alpha_bar_t)) of kl_transition.
double kl_transition_weight(const NoiseSchedule& sched, int t);

/// KL between isotropic Gaussians centred at phi_a and phi_b with variance sigma_phi_sq.
double kl_embedding(const Vec& phi_a, const Vec& phi_b, double sigma_phi_sq);

}  // namespace ntta
