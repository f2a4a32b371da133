// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "ntta/baselines.hpp"
#include "ntta/errors.hpp"

using namespace ntta;
using ntta::testing::bitwise_equal;
using ntta::testing::small_model;
using ntta::testing::small_schedule;

namespace {

RewardSpec target() {
  Vec m(2);
  m << 1.0, -0.5;
  return RewardSpec{TargetMode{m}};
}

// Guided ancestral chain written out step by step.
Vec manual_chain(const DenoiserModel& m, const NoiseSchedule& s, const Vec& cond, double scale,
                 std::mt19937_64& rng) {
  LatentState x{standard_normal(rng, 2), s.total_steps()};
  while (x.t >= 1) {
    const Vec eu = predict_noise(m, x, m.null_embedding());
    const Vec ec = predict_noise(m, x, cond);
    const Vec eps = eu + scale * (ec - eu);
    const Vec noise = x.t >= 2 ? standard_normal(rng, 2) : Vec::Zero(2);
    x = ddpm_step(x, eps, noise, s);
  }
  return x.x;
}

}  // namespace

TEST_CASE("unaligned sampling") {
  const DenoiserModel m = small_model();
  const NoiseSchedule s = small_schedule();
  for (std::uint64_t seed : {0u, 7u, 99u}) {
    std::mt19937_64 rng(seed);
    const Vec want = manual_chain(m, s, m.condition(1), 2.5, rng);
    CHECK((sample_unaligned(m, s, 1, 2.5, seed) - want).norm() < 1e-13);
    CHECK(bitwise_equal(sample_unaligned(m, s, 1, 2.5, seed), sample_unaligned(m, s, 1, 2.5, seed)));
    // s = 0 ignores the class entirely.
    CHECK(bitwise_equal(sample_unaligned(m, s, 0, 0.0, seed), sample_unaligned(m, s, 1, 0.0, seed)));
  }
}

TEST_CASE("best of n") {
  const DenoiserModel m = small_model();
  const NoiseSchedule s = small_schedule();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CHECK(bitwise_equal(best_of_n(m, s, 0, 3.0, 1, target(), seed), sample_unaligned(m, s, 0, 3.0, seed)));
    std::mt19937_64 rng(seed);
    double best = -1e300;
    for (int k = 0; k < 5; ++k) best = std::max(best, evaluate(target(), manual_chain(m, s, m.condition(0), 3.0, rng)));
    const double got = evaluate(target(), best_of_n(m, s, 0, 3.0, 5, target(), seed));
    CHECK(got == doctest::Approx(best).epsilon(1e-12));
  }
  CHECK_THROWS_AS(best_of_n(m, s, 0, 3.0, 0, target(), 1), ConfigError);
}

TEST_CASE("zero-intensity baselines reduce to unaligned sampling") {
  const DenoiserModel m = small_model();
  const NoiseSchedule s = small_schedule();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Vec plain = sample_unaligned(m, s, 1, 3.0, seed);
    CHECK(bitwise_equal(step_guidance_sample(m, s, 1, 3.0, 0.0, target(), seed), plain));
    CHECK(bitwise_equal(noise_opt_sample(m, s, 1, 3.0, 0, 0.5, target(), seed), plain));
  }
}

TEST_CASE("baselines move toward the target") {
  const DenoiserModel m = small_model();
  const NoiseSchedule s = small_schedule();
  double plain = 0.0, guided = 0.0, optimised = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    plain += evaluate(target(), sample_unaligned(m, s, 0, 3.0, seed));
    guided += evaluate(target(), step_guidance_sample(m, s, 0, 3.0, 0.3, target(), seed));
    optimised += evaluate(target(), noise_opt_sample(m, s, 0, 3.0, 10, 0.01, target(), seed));
  }
  CHECK(guided > plain);
  CHECK(optimised > plain);
}

TEST_CASE("baseline evaluation counts equal the closed form") {
  const DenoiserModel m = small_model();
  const NoiseSchedule s = small_schedule();
  const std::vector<BaselineVariant> variants{Unaligned{}, BestOfN{3}, StepGuidance{0.2}, StepGuidance{0.0},
                                              NoiseOpt{4, 0.1}, NoiseOpt{0, 0.1}};
  for (const auto& v : variants) {
    BaselineConfig cfg;
    cfg.variant = v;
    cfg.seed = 5;
    EvalCounters c;
    run_baseline(m, s, 0, cfg, target(), &c);
    CHECK(c == baseline_evaluations(cfg, 20));
  }
  BaselineConfig dno;
  dno.variant = NoiseOpt{4, 0.1};
  // (M + 1) chains of 2 passes per step, M backward sweeps of 4 per step.
  CHECK(baseline_evaluations(dno, 20).denoiser_passes == 5 * 40 + 4 * 80);
  CHECK(baseline_evaluations(dno, 20).reward_evals == 4);
}

TEST_CASE("gradient baselines reject non-differentiable rewards") {
  const DenoiserModel m = small_model();
  const NoiseSchedule s = small_schedule();
  const RewardSpec q{QuantizedCodeLength{0.5}};
  CHECK_THROWS_AS(step_guidance_sample(m, s, 0, 3.0, 0.1, q, 1), ModeError);
  CHECK_THROWS_AS(noise_opt_sample(m, s, 0, 3.0, 2, 0.1, q, 1), ModeError);
  CHECK_NOTHROW(best_of_n(m, s, 0, 3.0, 2, q, 1));
}
