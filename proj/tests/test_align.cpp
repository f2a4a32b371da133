// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "ntta/align.hpp"
#include "ntta/baselines.hpp"
#include "ntta/errors.hpp"
#include "ntta/oracles.hpp"

using namespace ntta;
using ntta::testing::bitwise_equal;
using ntta::testing::small_model;
using ntta::testing::small_schedule;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

RewardSpec target() { return RewardSpec{TargetMode{v2(1.0, 1.0)}}; }

std::vector<double> betas_of(const NoiseSchedule& s) {
  std::vector<double> b;
  for (int t = 1; t <= s.total_steps(); ++t) b.push_back(s.beta(t));
  return b;
}

}  // namespace

TEST_CASE("anneal_lambda2") {
  CHECK(anneal_lambda2(100, 100, 0.008, 0.002) == 0.002);
  // 1.008^100 = exp(100 log 1.008) ~ 2.2186 > 2
  CHECK(std::exp(100.0 * std::log1p(0.008)) == doctest::Approx(2.2186).epsilon(1e-4));
  CHECK(anneal_lambda2(0, 100, 0.008, 0.002) == 0.0);
  double prev = anneal_lambda2(100, 100, 0.008, 0.002);
  for (int t = 99; t >= 0; --t) {
    const double cur = anneal_lambda2(t, 100, 0.008, 0.002);
    CHECK(cur <= prev);
    prev = cur;
  }
  CHECK(anneal_lambda2(50, 100, 0.008, 0.002) ==
        doctest::Approx(0.002 * (2.0 - std::pow(1.008, 50))).epsilon(1e-14));
}

TEST_CASE("inner_steps") {
  CHECK(inner_steps(100, 100, 0.008, 5, 25) == 5);
  // First k with 1.008^k >= 2, found by direct multiplication.
  int first = 0;
  for (long double p = 1.0L; p < 2.0L; p *= 1.008L) ++first;
  CHECK(first == 87);
  for (int t = 0; t <= 100; ++t) {
    const int n = inner_steps(t, 100, 0.008, 5, 25);
    if (100 - t >= first) {
      CHECK(n == 25);
    } else {
      CHECK(n < 25);
      CHECK(n >= 5);
      CHECK(n == 5 + static_cast<int>(std::floor((std::pow(1.008, 100 - t) - 1.0) * 20.0)));
    }
  }
  for (int t = 0; t <= 100; ++t) CHECK(inner_steps(t, 100, 0.008, 7, 7) == 7);
}

TEST_CASE("alignment objective identities") {
  const DenoiserModel m = small_model();
  const NoiseSchedule s = small_schedule();
  AlignmentConfig cfg;
  const LatentState x{v2(0.3, -0.8), 12};
  const Vec cond = m.condition(1);

  SUBCASE("phi' = phi and lambda1 = 0 gives exactly zero") {
    cfg.lambda1 = 0.0;
    const StepContext ctx = prepare_step(m, s, x, cond, m.null_embedding(), cfg);
    CHECK(alignment_objective(m, s, ctx, m.null_embedding(), cfg, target()).value == 0.0);
  }
  SUBCASE("no regularisation leaves the pure reward") {
    StepContext ctx = prepare_step(m, s, x, cond, m.null_embedding(), cfg);
    ctx.lambda2_t = 0.0;
    std::mt19937_64 rng(1);
    const Vec pp = m.null_embedding() + 0.2 * standard_normal(rng, 8);
    const ObjectiveTerms terms = alignment_objective(m, s, ctx, pp, cfg, target());
    CHECK(terms.value == cfg.lambda1 * terms.reward);
    const double direct = oracle::objective_direct(m, betas_of(s), x.x, x.t, cond, pp, m.null_embedding(),
                                                   cfg.guidance_scale, cfg.lambda1, 0.0, cfg.sigma_phi_sq,
                                                   [](const Vec& p) { return evaluate(target(), p); });
    CHECK(terms.value == doctest::Approx(direct).epsilon(1e-12));
  }
  SUBCASE("straight-line re-evaluation and term breakdown") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 20; ++i) {
      const LatentState st{standard_normal(rng, 2), 1 + static_cast<int>(rng() % 20)};
      StepContext ctx = prepare_step(m, s, st, cond, m.null_embedding(), cfg);
      ctx.lambda2_t = 0.002;
      const Vec pp = m.null_embedding() + 0.3 * standard_normal(rng, 8);
      const ObjectiveTerms terms = alignment_objective(m, s, ctx, pp, cfg, target());
      const double direct = oracle::objective_direct(
          m, betas_of(s), st.x, st.t, cond, pp, m.null_embedding(), cfg.guidance_scale, cfg.lambda1,
          0.002, cfg.sigma_phi_sq, [](const Vec& p) { return evaluate(target(), p); });
      CHECK(terms.value == doctest::Approx(direct).epsilon(1e-12));
      CHECK(terms.value == doctest::Approx(cfg.lambda1 * terms.reward - 0.002 * terms.kl_transition -
                                           0.002 * terms.kl_embedding)
                               .epsilon(1e-14));
      CHECK(terms.kl_embedding == doctest::Approx(kl_embedding(pp, m.null_embedding(), cfg.sigma_phi_sq)));
    }
  }
}

TEST_CASE("alignment objective gradient matches central differences") {
  const DenoiserModel m = small_model(5);
  const NoiseSchedule s = small_schedule();
  AlignmentConfig cfg;
  std::mt19937_64 rng(4);
  Vec a(2);
  a << 0.4, -0.9;
  const std::vector<RewardSpec> rewards{target(), RewardSpec{LinearScore{a}}, RewardSpec{RadialBand{1.5, 0.4}},
                                        make_combo(0.6, target(), RewardSpec{RadialBand{1.0, 0.5}})};
  for (const auto& reward : rewards) {
    for (int i = 0; i < 5; ++i) {
      const LatentState st{standard_normal(rng, 2), 1 + static_cast<int>(rng() % 20)};
      StepContext ctx = prepare_step(m, s, st, m.condition(0), m.null_embedding(), cfg);
      ctx.lambda2_t = cfg.lambda2;
      const Vec pp = m.null_embedding() + 0.3 * standard_normal(rng, 8);
      Vec grad;
      alignment_objective(m, s, ctx, pp, cfg, reward, &grad);
      const Vec fd = oracle::central_difference(
          [&](const Vec& p) { return alignment_objective(m, s, ctx, p, cfg, reward).value; }, pp, 1e-5);
      for (Eigen::Index k = 0; k < fd.size(); ++k) {
        CHECK(std::abs(grad[k] - fd[k]) <= 1e-4 * std::max(std::abs(fd[k]), 1e-6));
      }
    }
  }
  StepContext ctx = prepare_step(m, s, {v2(0, 0), 5}, m.condition(0), m.null_embedding(), cfg);
  Vec grad;
  CHECK_THROWS_AS(alignment_objective(m, s, ctx, m.null_embedding(), cfg,
                                      RewardSpec{QuantizedCodeLength{0.5}}, &grad),
                  ModeError);
}

TEST_CASE("optimize_null") {
  const DenoiserModel m = small_model();
  const NoiseSchedule s = small_schedule();
  AlignmentConfig cfg;
  const StepContext ctx = prepare_step(m, s, {v2(0.5, 0.5), 10}, m.condition(0), m.null_embedding(), cfg);

  SUBCASE("zero inner steps leave phi' unchanged") {
    cfg.n_min = 0;
    cfg.n_max = 0;
    AlignmentState st(m, cfg);
    st.phi_prime = m.null_embedding() + Vec::Constant(8, 0.1);
    const Vec before = st.phi_prime;
    CHECK(inner_steps(20, 20, cfg.gamma, 0, 0) == 0);
    optimize_null(m, s, ctx, st, cfg, target(), 0);
    CHECK(bitwise_equal(st.phi_prime, before));
  }
  SUBCASE("lambda1 = 0 keeps phi' = phi exactly") {
    cfg.lambda1 = 0.0;
    AlignmentState st(m, cfg);
    optimize_null(m, s, ctx, st, cfg, target(), 25);
    CHECK(bitwise_equal(st.phi_prime, m.null_embedding()));
  }
  SUBCASE("lambda1 = 0 pulls a displaced phi' back") {
    cfg.lambda1 = 0.0;
    cfg.lambda2 = 1.0;
    StepContext strong = ctx;
    strong.lambda2_t = 1.0;
    AlignmentState st(m, cfg);
    st.phi_prime = m.null_embedding() + Vec::Constant(8, 0.2);
    double prev = (st.phi_prime - st.phi).norm();
    for (int i = 0; i < 5; ++i) {
      optimize_null(m, s, strong, st, cfg, target(), 1);
      const double cur = (st.phi_prime - st.phi).norm();
      CHECK(cur < prev);
      prev = cur;
    }
  }
  SUBCASE("non-differentiable reward needs zeroth order") {
    AlignmentState st(m, cfg);
    CHECK_THROWS_AS(optimize_null(m, s, ctx, st, cfg, RewardSpec{QuantizedCodeLength{0.5}}, 1), ModeError);
    cfg.gradient = ZerothOrderGradient{0.05, 4, 1, false};
    AlignmentState zs(m, cfg);
    CHECK_NOTHROW(optimize_null(m, s, ctx, zs, cfg, RewardSpec{QuantizedCodeLength{0.5}}, 2));
  }
  SUBCASE("non-finite gradient raises an alignment error") {
    Vec huge(2);
    huge << 1e300, 1e300;
    AlignmentState st(m, cfg);
    cfg.lambda1 = 1e300;
    try {
      optimize_null(m, s, ctx, st, cfg, RewardSpec{LinearScore{huge}}, 3);
      FAIL("expected AlignmentError");
    } catch (const AlignmentError& e) {
      CHECK(e.timestep() == 10);
      CHECK(e.inner_step() == 0);
    }
  }
}

TEST_CASE("select_best") {
  const std::vector<double> a{0.1, 0.9, 0.5};
  CHECK(select_best(a) == 1);
  const std::vector<double> ties{0.3, 0.7, 0.7};
  CHECK(select_best(ties) == 1);
  CHECK(select_best(std::vector<double>{-2.0}) == 0);
  CHECK_THROWS_AS(select_best(std::vector<double>{}), RangeError);
}

TEST_CASE("greedy particle step") {
  const DenoiserModel m = small_model();
  const NoiseSchedule s = small_schedule();
  AlignmentConfig cfg;
  const LatentState x{v2(-0.2, 0.4), 9};
  const Vec cond = m.condition(0);
  const Vec eps = cfg_noise(m, x, m.null_embedding(), cond, cfg.guidance_scale);
  SUBCASE("K = 1 is one plain transition draw") {
    cfg.particles = 1;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::mt19937_64 a(seed), b(seed);
      const ParticleStep p = greedy_particle_step(m, s, x, eps, m.null_embedding(), cond, cfg, target(), a);
      const LatentState plain = ddpm_step(x, eps, transition_noise(b, x.t, 2), s);
      CHECK(bitwise_equal(p.next.x, plain.x));
      CHECK(p.next.t == 8);
      CHECK(p.selected == 0);
    }
  }
  SUBCASE("selected candidate has the best score") {
    cfg.particles = 6;
    std::mt19937_64 rng(4);
    EvalCounters c;
    const ParticleStep p = greedy_particle_step(m, s, x, eps, m.null_embedding(), cond, cfg, target(), rng, &c);
    REQUIRE(p.candidate_rewards.size() == 6);
    for (double r : p.candidate_rewards) CHECK(p.candidate_rewards[p.selected] >= r);
    CHECK(c.denoiser_passes == 12);
    CHECK(c.reward_evals == 6);
  }
}

TEST_CASE("align_sample determinism, reduction and accounting") {
  const DenoiserModel m = small_model();
  const NoiseSchedule s = small_schedule();
  AlignmentConfig cfg;
  cfg.n_max = 8;
  cfg.seed = 42;
  const AlignmentResult a = align_sample(m, s, 1, cfg, target());
  const AlignmentResult b = align_sample(m, s, 1, cfg, target());
  CHECK(bitwise_equal(a.x0, b.x0));
  CHECK(bitwise_equal(a.phi_prime, b.phi_prime));
  REQUIRE(a.record.size() == 20);
  CHECK(a.record.front().t == 20);
  CHECK(a.record.back().t == 1);
  CHECK(a.counters == expected_evaluations(cfg, 20));

  SUBCASE("lambda1 = 0, K = 1 reproduces plain guided sampling per seed") {
    cfg.lambda1 = 0.0;
    cfg.particles = 1;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      cfg.seed = seed;
      const AlignmentResult r = align_sample(m, s, 0, cfg, target());
      CHECK(bitwise_equal(r.x0, sample_unaligned(m, s, 0, cfg.guidance_scale, seed)));
      CHECK(r.phi_prime == m.null_embedding());
    }
  }
  SUBCASE("counts equal the closed form in every mode") {
    for (int k : {1, 3}) {
      for (bool zo : {false, true}) {
        AlignmentConfig c = cfg;
        c.particles = k;
        c.n_min = 1;
        c.n_max = 4;
        if (zo) c.gradient = ZerothOrderGradient{0.01, 3, 5, k == 3};
        CHECK(align_sample(m, s, 0, c, target()).counters == expected_evaluations(c, 20));
      }
    }
  }
  SUBCASE("hand-counted budget") {
    // T = 3, two inner steps per timestep, K = 2, analytic:
    // passes 3 * (3 + 2 * 2) + 2 * (2 * 2) = 29, reward evals 3 * (2 + 1 + 2) = 15.
    AlignmentConfig c;
    c.n_min = 2;
    c.n_max = 2;
    c.particles = 2;
    const EvalCounters e = expected_evaluations(c, 3);
    CHECK(e.denoiser_passes == 29);
    CHECK(e.reward_evals == 15);
  }
  SUBCASE("reset flag restarts phi' each timestep") {
    AlignmentConfig c = cfg;
    c.reset_embedding_per_timestep = true;
    c.n_min = 0;
    c.n_max = 0;
    const AlignmentResult r = align_sample(m, s, 0, c, target());
    for (const auto& rec : r.record) CHECK(rec.phi_drift == 0.0);
  }
}

TEST_CASE("alignment config validation") {
  AlignmentConfig c;
  CHECK_NOTHROW(c.validate());
  c.n_min = 30;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.particles = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.sigma_phi_sq = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.gamma = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
