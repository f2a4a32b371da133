// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

// Checks against the reference model trained from the default experiment.

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ntta/align.hpp"
#include "ntta/baselines.hpp"
#include "ntta/config.hpp"
#include "ntta/experiment.hpp"

using namespace ntta;

namespace {

struct Reference {
  ExperimentConfig cfg;
  Checkpoint ck;
  NoiseSchedule sched;
  DatasetSpec data;
};

const Reference& reference() {
  static const Reference r = [] {
    ExperimentConfig cfg = default_experiment();
    cfg.model.checkpoint = NTTA_REFERENCE_CHECKPOINT;
    Checkpoint ck = prepare_model(cfg);
    const auto& s = ck.schedule;
    NoiseSchedule sched = build_schedule(s.total_steps, s.beta_start, s.beta_end);
    DatasetSpec data = cfg.dataset.to_spec();
    return Reference{cfg, std::move(ck), std::move(sched), std::move(data)};
  }();
  return r;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

constexpr int kSeeds = 30;
constexpr int kSeedsOverOptimisation = 60;

}  // namespace

TEST_CASE("reference model fits the data") {
  const Reference& r = reference();
  CHECK(r.ck.training.final_loss < 0.30);

  // Class-0 samples sit close to one of the class-0 modes.
  double dist = 0.0;
  int owned = 0;
  const int n = 300;
  for (int i = 0; i < n; ++i) {
    const Vec x = sample_unaligned(r.ck.model, r.sched, 0, 3.0, 500 + i);
    const int c = nearest_component(r.data, x);
    dist += (x - r.data.components[c].mean).norm();
    owned += r.data.components[c].label == 0;
  }
  CHECK(dist / n < 0.30);
  CHECK(owned >= n * 95 / 100);
}

TEST_CASE("baselines on the reference model") {
  const Reference& r = reference();
  const RewardSpec& target = r.cfg.target.spec;
  std::vector<double> plain;
  for (int i = 0; i < kSeeds; ++i) plain.push_back(evaluate(target, sample_unaligned(r.ck.model, r.sched, 0, 3.0, i)));

  SUBCASE("best-of-n is nondecreasing in n") {
    for (int i = 0; i < kSeeds; ++i) {
      double prev = -INFINITY;
      for (int n : {1, 2, 4, 8, 16}) {
        const double v = evaluate(target, best_of_n(r.ck.model, r.sched, 0, 3.0, n, target, i));
        CHECK(v >= prev);
        prev = v;
      }
    }
  }
  SUBCASE("small step guidance improves on unaligned") {
    std::vector<double> guided;
    for (int i = 0; i < kSeeds; ++i)
      guided.push_back(evaluate(target, step_guidance_sample(r.ck.model, r.sched, 0, 3.0, 0.01, target, i)));
    CHECK(mean(guided) > mean(plain));
  }
  SUBCASE("many noise-optimisation steps improve on unaligned") {
    std::vector<double> opt;
    for (int i = 0; i < kSeeds; ++i)
      opt.push_back(evaluate(target, noise_opt_sample(r.ck.model, r.sched, 0, 3.0, 50, 1.0, target, i)));
    CHECK(mean(opt) > mean(plain));
  }
}

TEST_CASE("inner loop raises the objective at almost every timestep") {
  const Reference& r = reference();
  int raised = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    AlignmentConfig ac = r.cfg.alignment;
    ac.seed = seed;
    const AlignmentResult run = align_sample(r.ck.model, r.sched, 0, ac, r.cfg.target.spec);
    for (const auto& rec : run.record) {
      raised += rec.objective >= rec.objective_start;
      ++total;
    }
  }
  CHECK(raised >= 0.9 * total);
}

TEST_CASE("noise optimisation over-optimises relative to null-embedding alignment") {
  const Reference& r = reference();
  const RewardSpec& target = r.cfg.target.spec;
  std::vector<double> tta_target, opt_target, tta_manifold, opt_manifold;
  std::vector<std::vector<double>> tta_held(r.cfg.held_out.size()), opt_held(r.cfg.held_out.size());
  for (int i = 0; i < kSeedsOverOptimisation; ++i) {
    AlignmentConfig ac = r.cfg.alignment;
    ac.seed = 300 + i;
    const Vec a = align_sample(r.ck.model, r.sched, 0, ac, target).x0;
    const Vec b = noise_opt_sample(r.ck.model, r.sched, 0, 3.0, 50, 1.0, target, 300 + i);
    tta_target.push_back(evaluate(target, a));
    opt_target.push_back(evaluate(target, b));
    for (std::size_t k = 0; k < r.cfg.held_out.size(); ++k) {
      tta_held[k].push_back(evaluate(r.cfg.held_out[k].spec, a));
      opt_held[k].push_back(evaluate(r.cfg.held_out[k].spec, b));
    }
    const int ca = nearest_component(r.data, a), cb = nearest_component(r.data, b);
    tta_manifold.push_back((a - r.data.components[ca].mean).norm());
    opt_manifold.push_back((b - r.data.components[cb].mean).norm());
  }
  MESSAGE("target: null_tta " << mean(tta_target) << " noise_opt " << mean(opt_target));
  for (std::size_t k = 0; k < r.cfg.held_out.size(); ++k)
    MESSAGE(r.cfg.held_out[k].name << ": null_tta " << mean(tta_held[k]) << " noise_opt " << mean(opt_held[k]));
  MESSAGE("distance to nearest mode: null_tta " << mean(tta_manifold) << " noise_opt " << mean(opt_manifold));
  std::vector<double> diff;
  for (int i = 0; i < kSeedsOverOptimisation; ++i) diff.push_back(opt_manifold[i] - tta_manifold[i]);
  const double m = mean(diff);
  double ss = 0.0;
  for (double d : diff) ss += (d - m) * (d - m);
  const double se = std::sqrt(ss / (kSeedsOverOptimisation - 1) / kSeedsOverOptimisation);
  MESSAGE("paired distance difference " << m << " se " << se);
  CHECK(m > 1.645 * se);
}
