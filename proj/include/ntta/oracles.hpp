// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ntta/denoiser.hpp"

// Reference implementations used to cross-check the library. Oracle
// arithmetic works from raw betas and raw denoiser outputs and never goes
// through diffusion.cpp, align.cpp or sampling.cpp.
namespace ntta::oracle {

struct OracleReport {
  std::string name;
  double oracle = 0.0;
  double impl = 0.0;
  double tolerance = 0.0;
  bool relative = true;
  bool pass = false;
  long samples = 0;
};

/// Fills in `pass` from |impl - oracle| against tolerance (relative to
/// |oracle| when `relative`).
OracleReport make_report(std::string name, double oracle, double impl, double tolerance,
                         bool relative, long samples = 0);

/// Cumulative products of (1 - beta), index 0 = 1.
std::vector<double> alpha_bars_from_betas(const std::vector<double>& betas);

/// ||mu_a - mu_b||^2 / (2 variance) for Gaussians sharing an isotropic covariance.
double gaussian_kl_direct(const Vec& mu_a, const Vec& mu_b, double variance);

/// Optimal noise predictor for data x0 ~ N(m, v I).
class AnalyticGaussianDenoiser {
 public:
  AnalyticGaussianDenoiser(Vec mean, double variance, std::vector<double> betas);

  /// E[eps | x_t] = sqrt(1 - ab) (x_t - sqrt(ab) m) / (ab v + 1 - ab)
  Vec expected_noise(const Vec& x_t, int t) const;
  /// E[x0 | x_t] = (ab v x_t / sqrt(ab) + (1 - ab) m) / (ab v + 1 - ab)
  Vec posterior_mean(const Vec& x_t, int t) const;
  double alpha_bar(int t) const { return alpha_bars_[t]; }

 private:
  Vec mean_;
  double variance_;
  std::vector<double> alpha_bars_;
};

struct JointKlEstimate {
  double estimate = 0.0;        // mean trajectory log-ratio plus embedding term
  double standard_error = 0.0;  // of the log-ratio mean
  double closed_form = 0.0;     // mean of sum_t kl_transition plus kl_embedding
  long trajectories = 0;
};

/// Monte-Carlo KL between the guided reverse chains driven by phi' and phi.
/// Trajectories come from the phi' chain with x_T ~ N(0, I) shared by both
/// chains and every step stochastic (sigma_t^2 = beta_t, including t = 1).
/// `closed_form` evaluates the library's kl_transition and kl_embedding on
/// the same trajectories.
JointKlEstimate mc_joint_kl(const DenoiserModel& model, const Vec& phi_prime, const Vec& phi,
                            const Vec& cond_embedding, double guidance_scale,
                            const std::vector<double>& betas, double sigma_phi_sq,
                            long trajectories, std::uint64_t seed);

/// Straight-line evaluation of the per-step alignment objective
///   lambda1 R(x0_hat') - l2 w_t ||eps' - eps||^2 - l2 ||phi' - phi||^2 / (2 s2)
/// from raw denoiser outputs, for cross-checking alignment_objective.
double objective_direct(const DenoiserModel& model, const std::vector<double>& betas,
                        const Vec& x_t, int t, const Vec& cond, const Vec& phi_prime,
                        const Vec& phi, double guidance_scale, double lambda1, double lambda2_t,
                        double sigma_phi_sq, const std::function<double(const Vec&)>& reward);

/// Central finite-difference gradient of f at x with step h.
template <class F>
Vec central_difference(F&& f, const Vec& x, double h) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x;
    Vec xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

}  // namespace ntta::oracle
