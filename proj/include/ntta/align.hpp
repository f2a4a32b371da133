// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ntta/adam.hpp"
#include "ntta/denoiser.hpp"
#include "ntta/gradient.hpp"
#include "ntta/rewards.hpp"
#include "ntta/sampling.hpp"

namespace ntta {

/// Hyperparameters of null-embedding test-time alignment.
struct AlignmentConfig {
  double lambda1 = 2.0;        // reward weight
  double lambda2 = 0.002;      // base regularisation weight
  double sigma_phi_sq = 0.01;  // embedding prior variance
  double gamma = 0.008;        // annealing growth rate
  int n_min = 5;
  int n_max = 25;
  int particles = 3;
  double guidance_scale = 3.0;
  double learning_rate = 0.01;
  GradientMode gradient = AnalyticGradient{};
  std::uint64_t seed = 0;
  /// Keep the Adam moment buffers across timesteps instead of resetting them
  /// at the start of each timestep.
  bool persist_moments = false;
  /// Debug only: restart phi' from phi at every timestep.
  bool reset_embedding_per_timestep = false;

  void validate() const;
};

/// lambda2 * max(2 - (1 + gamma)^(T - t), 0)
double anneal_lambda2(int t, int total_steps, double gamma, double lambda2);

/// n_min + floor(min((1 + gamma)^(T - t) - 1, 1) * (n_max - n_min))
int inner_steps(int t, int total_steps, double gamma, int n_min, int n_max);

/// Everything about timestep t that does not depend on phi'. The original
/// embedding's quantities are computed once here and reused by every inner
/// step.
struct StepContext {
  LatentState state;
  Vec cond_embedding;
  Vec phi;  // frozen original null embedding
  Vec eps_cond;
  Vec eps_tilde_orig;
  double lambda2_t = 0.0;
};

/// Two denoiser passes (conditional and original unconditional).
StepContext prepare_step(const DenoiserModel& model, const NoiseSchedule& sched,
                         const LatentState& state, const Vec& cond_embedding, const Vec& phi,
                         const AlignmentConfig& config, EvalCounters* counters = nullptr);

struct ObjectiveTerms {
  double value = 0.0;
  double reward = 0.0;         // R(x0_hat(x_t, phi'))
  double kl_transition = 0.0;  // unweighted closed-form transition KL
  double kl_embedding = 0.0;   // unweighted embedding KL
  Vec eps_tilde;               // guided noise under phi'
};

/// J(phi') = lambda1 R(x0_hat) - lambda2_t kl_transition - lambda2_t kl_embedding.
/// When `grad` is non-null it receives dJ/dphi' by reverse mode through the
/// denoiser; that requires a differentiable reward (ModeError otherwise).
ObjectiveTerms alignment_objective(const DenoiserModel& model, const NoiseSchedule& sched,
                                   const StepContext& ctx, const Vec& phi_prime,
                                   const AlignmentConfig& config, const RewardSpec& reward,
                                   Vec* grad = nullptr);

/// Convenience overload that builds the step context for class `label`.
ObjectiveTerms alignment_objective(const DenoiserModel& model, const NoiseSchedule& sched,
                                   const LatentState& state, int label, const Vec& phi_prime,
                                   const Vec& phi, const AlignmentConfig& config,
                                   const RewardSpec& reward);

/// J(phi') at a fixed step as a grad-engine objective. Each value call costs
/// one denoiser pass and one reward evaluation; each value_and_gradient call
/// costs two passes and one reward evaluation. Counts go to `counters`.
Objective step_objective(const DenoiserModel& model, const NoiseSchedule& sched,
                         const StepContext& ctx, const AlignmentConfig& config,
                         const RewardSpec& reward, EvalCounters* counters);

/// Mutable state of one alignment run.
struct AlignmentState {
  LatentState latent;
  Vec phi_prime;
  Vec phi;
  double lambda2_t = 0.0;
  Adam optimizer;
  EvalCounters counters;
  std::mt19937_64 noise_rng;  // x_T and transition noise
  std::mt19937_64 zo_rng;     // zeroth-order directions

  AlignmentState(const DenoiserModel& model, const AlignmentConfig& config);
};

struct InnerLoopResult {
  int steps = 0;
  double objective_start = 0.0;
  double objective_end = 0.0;
};

/// `steps` Adam ascent steps on J at rate config.learning_rate. phi' and the
/// moment buffers persist in `state`. Throws AlignmentError on a non-finite
/// gradient.
InnerLoopResult optimize_null(const DenoiserModel& model, const NoiseSchedule& sched,
                              const StepContext& ctx, AlignmentState& state,
                              const AlignmentConfig& config, const RewardSpec& reward, int steps);

/// Index of the largest score; ties go to the lowest index.
int select_best(std::span<const double> scores);

struct ParticleStep {
  LatentState next;
  int selected = 0;
  std::vector<double> candidate_rewards;
};

/// Draws config.particles candidates from the transition driven by
/// `eps_tilde` (the guided noise under phi' at x_t), scores each by the
/// reward of its own Tweedie estimate under phi', and keeps the best.
ParticleStep greedy_particle_step(const DenoiserModel& model, const NoiseSchedule& sched,
                                  const LatentState& state, const Vec& eps_tilde,
                                  const Vec& phi_prime, const Vec& cond_embedding,
                                  const AlignmentConfig& config, const RewardSpec& reward,
                                  std::mt19937_64& rng, EvalCounters* counters = nullptr);

struct TimestepRecord {
  int t = 0;
  double lambda2_t = 0.0;
  int inner_steps = 0;
  double objective_start = 0.0;
  double objective = 0.0;
  double reward = 0.0;
  double kl_transition = 0.0;
  double kl_embedding = 0.0;
  double phi_drift = 0.0;
  int selected = 0;
  double selected_reward = 0.0;
  std::vector<double> candidate_rewards;
};

/// One record per timestep, ordered t = T .. 1.
using TrajectoryRecord = std::vector<TimestepRecord>;

struct AlignmentResult {
  Vec x0;
  Vec phi_prime;
  TrajectoryRecord record;
  EvalCounters counters;
};

/// The full loop: x_T ~ N(0, I), phi' <- phi, then for t = T .. 1 anneal,
/// optimise phi' and take a greedy particle step.
AlignmentResult align_sample(const DenoiserModel& model, const NoiseSchedule& sched, int label,
                             const AlignmentConfig& config, const RewardSpec& reward);

/// Closed-form evaluation budget of align_sample for `config`:
/// per timestep 3 denoiser passes (conditional, original unconditional and the
/// final phi' pass), plus 2 per analytic inner step or (zo evaluations) per
/// zeroth-order inner step, plus 2 per particle when t >= 2. Reward evals are
/// 1 per analytic inner step or (zo evaluations) per zeroth-order step, plus 1
/// for the final objective and 1 per particle.
EvalCounters expected_evaluations(const AlignmentConfig& config, int total_steps);

}  // namespace ntta
