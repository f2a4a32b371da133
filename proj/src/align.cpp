// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "ntta/align.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ntta/errors.hpp"
#include "ntta/sampling.hpp"

namespace ntta {

void AlignmentConfig::validate() const {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw ConfigError("lambda1 and lambda2 must be >= 0");
  if (!(sigma_phi_sq > 0.0)) throw ConfigError("sigma_phi_sq must be positive");
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (n_min < 0 || n_min > n_max) throw ConfigError("need 0 <= n_min <= n_max");
  if (particles < 1) throw ConfigError("particles must be >= 1");
  if (!(guidance_scale >= 0.0)) throw ConfigError("guidance scale must be >= 0");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and >= 0");
  }
  if (const auto* zo = std::get_if<ZerothOrderGradient>(&gradient)) zo->validate();
}

double anneal_lambda2(int t, int total_steps, double gamma, double lambda2) {
  const double growth = std::pow(1.0 + gamma, static_cast<double>(total_steps - t));
  return lambda2 * std::max(2.0 - growth, 0.0);
}

int inner_steps(int t, int total_steps, double gamma, int n_min, int n_max) {
  const double growth = std::pow(1.0 + gamma, static_cast<double>(total_steps - t));
  const double frac = std::min(growth - 1.0, 1.0);
  return n_min + static_cast<int>(std::floor(frac * (n_max - n_min)));
}

StepContext prepare_step(const DenoiserModel& model, const NoiseSchedule& sched,
                         const LatentState& state, const Vec& cond_embedding, const Vec& phi,
                         const AlignmentConfig& config, EvalCounters* counters) {
  StepContext ctx;
  ctx.state = state;
  ctx.cond_embedding = cond_embedding;
  ctx.phi = phi;
  ctx.eps_cond = predict_noise(model, state, cond_embedding);
  ctx.eps_tilde_orig =
      cfg_combine(predict_noise(model, state, phi), ctx.eps_cond, config.guidance_scale);
  ctx.lambda2_t = anneal_lambda2(state.t, sched.total_steps(), config.gamma, config.lambda2);
  if (counters) counters->denoiser_passes += 2;
  return ctx;
}

ObjectiveTerms alignment_objective(const DenoiserModel& model, const NoiseSchedule& sched,
                                   const StepContext& ctx, const Vec& phi_prime,
                                   const AlignmentConfig& config, const RewardSpec& reward,
                                   Vec* grad) {
  const int t = ctx.state.t;
  const double s = config.guidance_scale;
  DenoiserModel::Tape tape;
  const Vec eps_u = model.forward(ctx.state.x, std::span<const int>(&t, 1), phi_prime,
                                  grad ? &tape : nullptr);

  ObjectiveTerms terms;
  terms.eps_tilde = cfg_combine(eps_u, ctx.eps_cond, s);
  const Vec x0_hat = tweedie_x0(ctx.state, terms.eps_tilde, sched);
  terms.reward = evaluate(reward, x0_hat);
  terms.kl_transition = kl_transition(terms.eps_tilde, ctx.eps_tilde_orig, sched, t);
  terms.kl_embedding = kl_embedding(phi_prime, ctx.phi, config.sigma_phi_sq);
  terms.value = config.lambda1 * terms.reward - ctx.lambda2_t * terms.kl_transition -
                ctx.lambda2_t * terms.kl_embedding;

  if (grad) {
    if (!reward.differentiable()) {
      throw ModeError("reward " + reward.describe() +
                      " is not differentiable; use zeroth-order gradient mode");
    }
    const double ab = sched.alpha_bar(t);
    const Vec d_x0 = config.lambda1 * reward_gradient(reward, x0_hat);
    const Vec d_eps_tilde =
        (-std::sqrt(1.0 - ab) / std::sqrt(ab)) * d_x0 -
        (2.0 * ctx.lambda2_t * kl_transition_weight(sched, t)) * (terms.eps_tilde - ctx.eps_tilde_orig);
    const Mat d_eps_u = (1.0 - s) * d_eps_tilde;
    *grad = model.backward(tape, d_eps_u).embedding.col(0) -
            (ctx.lambda2_t / config.sigma_phi_sq) * (phi_prime - ctx.phi);
  }
  return terms;
}

ObjectiveTerms alignment_objective(const DenoiserModel& model, const NoiseSchedule& sched,
                                   const LatentState& state, int label, const Vec& phi_prime,
                                   const Vec& phi, const AlignmentConfig& config,
                                   const RewardSpec& reward) {
  const StepContext ctx = prepare_step(model, sched, state, model.condition(label), phi, config);
  return alignment_objective(model, sched, ctx, phi_prime, config, reward);
}

Objective step_objective(const DenoiserModel& model, const NoiseSchedule& sched,
                         const StepContext& ctx, const AlignmentConfig& config,
                         const RewardSpec& reward, EvalCounters* counters) {
  Objective obj;
  obj.value = [&model, &sched, &ctx, &config, &reward, counters](const Vec& phi_prime) {
    if (counters) {
      counters->denoiser_passes += 1;
      counters->reward_evals += 1;
    }
    return alignment_objective(model, sched, ctx, phi_prime, config, reward).value;
  };
  if (reward.differentiable()) {
    obj.value_and_gradient = [&model, &sched, &ctx, &config, &reward, counters](
                                 const Vec& phi_prime, Vec& grad) {
      if (counters) {
        counters->denoiser_passes += 2;
        counters->reward_evals += 1;
      }
      return alignment_objective(model, sched, ctx, phi_prime, config, reward, &grad).value;
    };
  }
  return obj;
}

AlignmentState::AlignmentState(const DenoiserModel& model, const AlignmentConfig& config)
    : phi_prime(model.null_embedding()),
      phi(model.null_embedding()),
      optimizer(AdamConfig{config.learning_rate}, model.embed_dim()),
      noise_rng(config.seed) {
  std::uint64_t zo_seed = 0;
  if (const auto* zo = std::get_if<ZerothOrderGradient>(&config.gradient)) zo_seed = zo->seed;
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(zo_seed), static_cast<std::uint32_t>(zo_seed >> 32),
                    0x7a0u};
  zo_rng.seed(seq);
}

InnerLoopResult optimize_null(const DenoiserModel& model, const NoiseSchedule& sched,
                              const StepContext& ctx, AlignmentState& state,
                              const AlignmentConfig& config, const RewardSpec& reward, int steps) {
  const Objective obj = step_objective(model, sched, ctx, config, reward, &state.counters);
  const auto* zo = std::get_if<ZerothOrderGradient>(&config.gradient);
  if (!zo && !obj.differentiable()) {
    throw ModeError("reward " + reward.describe() +
                    " is not differentiable; use zeroth-order gradient mode");
  }
  InnerLoopResult result;
  result.steps = steps;
  for (int n = 0; n < steps; ++n) {
    Vec grad;
    double value = 0.0;
    if (zo) {
      const auto est = zo_estimate(obj, state.phi_prime, *zo, state.zo_rng);
      grad = est.gradient;
      value = est.base_value;
    } else {
      grad = Vec::Zero(state.phi_prime.size());
      value = obj.value_and_gradient(state.phi_prime, grad);
    }
    if (n == 0) result.objective_start = value;
    if (!grad.allFinite()) {
      throw AlignmentError("non-finite gradient at timestep " + std::to_string(ctx.state.t) +
                               ", inner step " + std::to_string(n),
                           ctx.state.t, n);
    }
    state.phi_prime += state.optimizer.step(grad);
  }
  return result;
}

int select_best(std::span<const double> scores) {
  if (scores.empty()) throw RangeError("select_best: no candidates");
  int best = 0;
  for (int k = 1; k < static_cast<int>(scores.size()); ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  return best;
}

ParticleStep greedy_particle_step(const DenoiserModel& model, const NoiseSchedule& sched,
                                  const LatentState& state, const Vec& eps_tilde,
                                  const Vec& phi_prime, const Vec& cond_embedding,
                                  const AlignmentConfig& config, const RewardSpec& reward,
                                  std::mt19937_64& rng, EvalCounters* counters) {
  std::vector<LatentState> candidates;
  ParticleStep out;
  candidates.reserve(config.particles);
  out.candidate_rewards.reserve(config.particles);
  for (int k = 0; k < config.particles; ++k) {
    const Vec noise = transition_noise(rng, state.t, state.x.size());
    LatentState cand = ddpm_step(state, eps_tilde, noise, sched);
    Vec x0_hat;
    if (cand.t >= 1) {
      x0_hat = tweedie_x0(
          cand, cfg_noise(model, cand, phi_prime, cond_embedding, config.guidance_scale), sched);
      if (counters) counters->denoiser_passes += 2;
    } else {
      x0_hat = cand.x;
    }
    out.candidate_rewards.push_back(evaluate(reward, x0_hat));
    if (counters) counters->reward_evals += 1;
    candidates.push_back(std::move(cand));
  }
  out.selected = select_best(out.candidate_rewards);
  out.next = std::move(candidates[out.selected]);
  return out;
}

AlignmentResult align_sample(const DenoiserModel& model, const NoiseSchedule& sched, int label,
                             const AlignmentConfig& config, const RewardSpec& reward) {
  config.validate();
  reward.validate();
  const int total = sched.total_steps();
  const Vec cond = model.condition(label);
  AlignmentState state(model, config);
  state.latent = LatentState{standard_normal(state.noise_rng, model.data_dim()), total};

  AlignmentResult result;
  result.record.reserve(total);
  for (int t = total; t >= 1; --t) {
    if (config.reset_embedding_per_timestep) state.phi_prime = state.phi;
    if (!config.persist_moments) state.optimizer.reset();
    const StepContext ctx = prepare_step(model, sched, state.latent, cond, state.phi, config,
                                         &state.counters);
    state.lambda2_t = ctx.lambda2_t;
    const int n_t = inner_steps(t, total, config.gamma, config.n_min, config.n_max);
    InnerLoopResult inner = optimize_null(model, sched, ctx, state, config, reward, n_t);

    const ObjectiveTerms terms =
        alignment_objective(model, sched, ctx, state.phi_prime, config, reward);
    state.counters.denoiser_passes += 1;
    state.counters.reward_evals += 1;
    if (n_t == 0) inner.objective_start = terms.value;

    ParticleStep step = greedy_particle_step(model, sched, state.latent, terms.eps_tilde,
                                             state.phi_prime, cond, config, reward,
                                             state.noise_rng, &state.counters);

    TimestepRecord rec;
    rec.t = t;
    rec.lambda2_t = ctx.lambda2_t;
    rec.inner_steps = n_t;
    rec.objective_start = inner.objective_start;
    rec.objective = terms.value;
    rec.reward = terms.reward;
    rec.kl_transition = terms.kl_transition;
    rec.kl_embedding = terms.kl_embedding;
    rec.phi_drift = (state.phi_prime - state.phi).norm();
    rec.selected = step.selected;
    rec.selected_reward = step.candidate_rewards[step.selected];
    rec.candidate_rewards = std::move(step.candidate_rewards);
    result.record.push_back(std::move(rec));
    state.latent = std::move(step.next);
  }
  result.x0 = state.latent.x;
  result.phi_prime = state.phi_prime;
  result.counters = state.counters;
  return result;
}

EvalCounters expected_evaluations(const AlignmentConfig& config, int total_steps) {
  long pass_per_step = 2;
  long reward_per_step = 1;
  if (const auto* zo = std::get_if<ZerothOrderGradient>(&config.gradient)) {
    pass_per_step = zo_evaluations(*zo);
    reward_per_step = zo_evaluations(*zo);
  }
  EvalCounters c;
  for (int t = total_steps; t >= 1; --t) {
    const long n = inner_steps(t, total_steps, config.gamma, config.n_min, config.n_max);
    c.denoiser_passes += 3 + n * pass_per_step + (t >= 2 ? 2L * config.particles : 0L);
    c.reward_evals += n * reward_per_step + 1 + config.particles;
  }
  return c;
}

}  // namespace ntta
