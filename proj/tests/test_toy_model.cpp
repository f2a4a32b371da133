// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "ntta/checkpoint.hpp"
#include "ntta/dataset.hpp"
#include "ntta/denoiser.hpp"
#include "ntta/errors.hpp"
#include "ntta/oracles.hpp"
#include "ntta/sampling.hpp"
#include "ntta/training.hpp"

using namespace ntta;
namespace fs = std::filesystem;

namespace {

DenoiserArch small_arch() {
  DenoiserArch a;
  a.embed_dim = 4;
  a.hidden_width = 16;
  a.hidden_layers = 2;
  a.num_classes = 4;
  a.total_steps = 20;
  return a;
}

bool bitwise_equal(const Vec& a, const Vec& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ntta-unit";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("dataset: zero spread puts every point on the mean") {
  DatasetSpec spec;
  spec.kind = DatasetKind::GaussianMixture;
  Vec m(2);
  m << 0.5, -1.5;
  spec.components = {{m, 0.0, 0}};
  spec.samples_per_class = 50;
  const LabeledPoints d = generate_dataset(spec);
  CHECK(d.size() == 50);
  for (Eigen::Index j = 0; j < d.size(); ++j) CHECK(d.points.col(j) == m);
}

TEST_CASE("dataset: ring mode counts are binomial") {
  const DatasetSpec spec = ring_spec(8, 2.0, 0.15, 1, 10000, 4);
  const LabeledPoints d = generate_dataset(spec);
  REQUIRE(d.size() == 10000);
  std::map<int, int> counts;
  for (int c : d.component) ++counts[c];
  REQUIRE(counts.size() == 8);
  const double n = 10000, p = 1.0 / 8;
  const double sd = std::sqrt(n * p * (1 - p));
  for (auto [c, k] : counts) CHECK(std::abs(k - n * p) <= 4.0 * sd);
}

TEST_CASE("dataset: ring layout and class blocks") {
  const DatasetSpec spec = ring_spec(8, 2.0, 0.15, 4, 10, 1);
  REQUIRE(spec.components.size() == 8);
  CHECK(spec.num_classes() == 4);
  for (std::size_t k = 0; k < 8; ++k) {
    CHECK(spec.components[k].mean.norm() == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(spec.components[k].label == static_cast<int>(k / 2));
  }
  CHECK_THROWS_AS(ring_spec(8, 2.0, 0.15, 3, 10, 1), ConfigError);
}

TEST_CASE("dataset: deterministic in the seed") {
  const DatasetSpec spec = ring_spec(8, 2.0, 0.15, 4, 200, 9);
  const LabeledPoints a = generate_dataset(spec), b = generate_dataset(spec);
  CHECK(a.points == b.points);
  CHECK(a.labels == b.labels);
  DatasetSpec other = spec;
  other.seed = 10;
  CHECK(generate_dataset(other).points != a.points);
}

TEST_CASE("dataset: off-manifold metric") {
  const DatasetSpec spec = ring_spec(8, 2.0, 0.15, 4, 10, 1);
  const Vec on = spec.components[3].mean;
  CHECK_FALSE(is_off_manifold(spec, on));
  CHECK(nearest_component(spec, on) == 3);
  const Vec edge = on + Vec::Constant(2, 0.44 / std::sqrt(2.0));  // 0.44 < 3 * 0.15
  CHECK_FALSE(is_off_manifold(spec, edge));
  CHECK(is_off_manifold(spec, Vec::Zero(2)));
  CHECK(off_manifold_rate(spec, {on, Vec::Zero(2), edge, Vec::Constant(2, 5.0)}) == 0.5);
}

TEST_CASE("denoiser: zero weights give zero output") {
  DenoiserModel m(small_arch(), 3);
  m.set_zero();
  std::mt19937_64 rng(1);
  for (int t : {1, 7, 20}) {
    const Vec out = predict_noise(m, {standard_normal(rng, 2), t}, standard_normal(rng, 4));
    CHECK(out.isZero(0.0));
  }
}

TEST_CASE("denoiser: pure and seeded") {
  const DenoiserModel a(small_arch(), 3), b(small_arch(), 3), c(small_arch(), 4);
  CHECK(bitwise_equal(a.flat_parameters(), b.flat_parameters()));
  CHECK_FALSE(bitwise_equal(a.flat_parameters(), c.flat_parameters()));
  Vec x(2);
  x << 0.3, -0.1;
  const Vec e1 = predict_noise(a, {x, 5}, a.condition(2));
  const Vec e2 = predict_noise(a, {x, 5}, a.condition(2));
  CHECK(bitwise_equal(e1, e2));
  CHECK(e1.size() == 2);
  CHECK(a.null_embedding().size() == 4);
  CHECK(a.condition(0).size() == 4);
  CHECK_THROWS_AS(a.condition(4), RangeError);
  CHECK_THROWS_AS(predict_noise(a, {Vec::Zero(3), 5}, a.condition(0)), ShapeError);
}

TEST_CASE("denoiser: batched forward matches single calls") {
  const DenoiserModel m(small_arch(), 5);
  std::mt19937_64 rng(2);
  Mat x(2, 3), emb(4, 3);
  std::vector<int> t{1, 10, 20};
  for (int j = 0; j < 3; ++j) {
    x.col(j) = standard_normal(rng, 2);
    emb.col(j) = standard_normal(rng, 4);
  }
  const Mat out = m.forward(x, t, emb);
  for (int j = 0; j < 3; ++j) {
    CHECK((out.col(j) - predict_noise(m, {x.col(j), t[j]}, emb.col(j))).norm() < 1e-14);
  }
}

TEST_CASE("denoiser: backward matches finite differences") {
  const DenoiserModel m(small_arch(), 6);
  std::mt19937_64 rng(3);
  const Vec x = standard_normal(rng, 2), e = standard_normal(rng, 4), w = standard_normal(rng, 2);
  const std::vector<int> t{9};
  DenoiserModel::Tape tape;
  m.forward(x, t, e, &tape);
  const auto g = m.backward(tape, w);
  const auto f_x = [&](const Vec& xx) { return w.dot(Vec(m.forward(xx, t, e).col(0))); };
  const auto f_e = [&](const Vec& ee) { return w.dot(Vec(m.forward(x, t, ee).col(0))); };
  CHECK((Vec(g.x.col(0)) - oracle::central_difference(f_x, x, 1e-6)).norm() < 1e-7);
  CHECK((Vec(g.embedding.col(0)) - oracle::central_difference(f_e, e, 1e-6)).norm() < 1e-7);
}

TEST_CASE("analytic Gaussian denoiser fixture") {
  std::vector<double> betas;
  for (int i = 0; i < 50; ++i) betas.push_back(0.001 + 0.004 * i);
  Vec mean(2);
  mean << 1.0, -2.0;
  std::mt19937_64 rng(8);
  SUBCASE("zero variance returns the exact forward noise") {
    const oracle::AnalyticGaussianDenoiser f(mean, 0.0, betas);
    for (int t : {1, 10, 50}) {
      const Vec eps = standard_normal(rng, 2);
      const double ab = f.alpha_bar(t);
      const Vec xt = std::sqrt(ab) * mean + std::sqrt(1 - ab) * eps;
      CHECK((f.expected_noise(xt, t) - eps).norm() < 1e-9);
    }
  }
  SUBCASE("noise and posterior mean are consistent") {
    const oracle::AnalyticGaussianDenoiser f(mean, 0.7, betas);
    for (int t = 1; t <= 50; ++t) {
      const Vec xt = standard_normal(rng, 2);
      const double ab = f.alpha_bar(t);
      const Vec implied = (xt - std::sqrt(ab) * f.posterior_mean(xt, t)) / std::sqrt(1 - ab);
      CHECK((f.expected_noise(xt, t) - implied).norm() < 1e-9);
    }
  }
  SUBCASE("posterior mean matches a Monte-Carlo conditional mean in 1D") {
    // Joint Gaussian: E[x0 | x_t] is the regression of x0 on x_t.
    const oracle::AnalyticGaussianDenoiser f(Vec::Constant(1, 0.5), 2.0, betas);
    const int t = 30;
    const double ab = f.alpha_bar(t);
    std::normal_distribution<double> n;
    double sxx = 0, sxy = 0, mx = 0, my = 0;
    const int N = 200000;
    std::vector<double> xs(N), ys(N);
    for (int i = 0; i < N; ++i) {
      ys[i] = 0.5 + std::sqrt(2.0) * n(rng);
      xs[i] = std::sqrt(ab) * ys[i] + std::sqrt(1 - ab) * n(rng);
      mx += xs[i] / N;
      my += ys[i] / N;
    }
    for (int i = 0; i < N; ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    const double slope = sxy / sxx;
    const double at = 1.3;
    const double mc = my + slope * (at - mx);
    CHECK(f.posterior_mean(Vec::Constant(1, at), t)[0] == doctest::Approx(mc).epsilon(0.02));
  }
}

TEST_CASE("training loss") {
  const NoiseSchedule s = build_schedule(20, 1e-3, 0.2);
  const LabeledPoints d = generate_dataset(ring_spec(8, 2.0, 0.15, 4, 500, 2));
  DenoiserModel zero(small_arch(), 1);
  zero.set_zero();
  // E||eps||^2 = d_x with variance 2 d_x per example.
  const double loss = training_loss(zero, d.points, d.labels, s, 5);
  CHECK(std::abs(loss - 2.0) < 4.0 * std::sqrt(4.0 / static_cast<double>(d.size())));
  const DenoiserModel m(small_arch(), 1);
  for (std::uint64_t seed = 0; seed < 5; ++seed) CHECK(training_loss(m, d.points, d.labels, s, seed) >= 0.0);
}

TEST_CASE("training gradient matches finite differences") {
  const NoiseSchedule s = build_schedule(20, 1e-3, 0.2);
  const LabeledPoints d = generate_dataset(ring_spec(8, 2.0, 0.15, 4, 4, 2));
  DenoiserArch a = small_arch();
  a.hidden_width = 6;
  const DenoiserModel m(a, 2);
  std::mt19937_64 rng(4);
  const LossGradient lg = training_gradient(m, d.points, d.labels, s, rng, 0.3);
  const Vec p0 = m.flat_parameters();
  const auto loss_at = [&](const Vec& p) {
    DenoiserModel mm = m;
    mm.set_flat_parameters(p);
    std::mt19937_64 r(4);
    return training_gradient(mm, d.points, d.labels, s, r, 0.3).loss;
  };
  CHECK(loss_at(p0) == lg.loss);
  const Vec fd = oracle::central_difference(loss_at, p0, 1e-6);
  CHECK((fd - lg.gradient).norm() <= 1e-6 * (1.0 + fd.norm()));
}

TEST_CASE("train: zero steps and determinism") {
  const NoiseSchedule s = build_schedule(20, 1e-3, 0.2);
  const LabeledPoints d = generate_dataset(ring_spec(8, 2.0, 0.15, 4, 100, 2));
  const DenoiserModel init(small_arch(), 1);
  TrainConfig cfg;
  cfg.steps = 0;
  CHECK(bitwise_equal(train(init, d, s, cfg).model.flat_parameters(), init.flat_parameters()));

  cfg.steps = 60;
  cfg.batch_size = 32;
  cfg.seed = 3;
  const TrainResult a = train(init, d, s, cfg), b = train(init, d, s, cfg);
  CHECK(bitwise_equal(a.model.flat_parameters(), b.model.flat_parameters()));
  CHECK(a.loss_history == b.loss_history);
  CHECK(a.loss_history.size() == 60);
  CHECK(a.model.all_finite());

  cfg.ema_decay = 0.0;
  const TrainResult last = train(init, d, s, cfg);
  CHECK(last.loss_history == a.loss_history);
  CHECK_FALSE(bitwise_equal(last.model.flat_parameters(), a.model.flat_parameters()));
  cfg.ema_decay = 1.0;
  CHECK_THROWS_AS(train(init, d, s, cfg), ConfigError);
}

TEST_CASE("train: loss decreases on a small problem") {
  const NoiseSchedule s = build_schedule(20, 1e-3, 0.2);
  const LabeledPoints d = generate_dataset(ring_spec(8, 2.0, 0.15, 4, 200, 2));
  TrainConfig cfg;
  cfg.steps = 400;
  cfg.batch_size = 64;
  cfg.optimizer.learning_rate = 3e-3;
  const TrainResult r = train(DenoiserModel(small_arch(), 1), d, s, cfg);
  double head = 0, tail = 0;
  for (int i = 0; i < 50; ++i) {
    head += r.loss_history[i] / 50;
    tail += r.loss_history[r.loss_history.size() - 1 - i] / 50;
  }
  CHECK(tail < head);
}

TEST_CASE("checkpoint round trip and corruption") {
  Checkpoint ck{DenoiserModel(small_arch(), 11), {20, 1e-3, 0.2}, {123, 4, 0.5}};
  const fs::path path = temp_file("roundtrip.ckpt");
  save_checkpoint(ck, path);
  const Checkpoint back = load_checkpoint(path);
  CHECK(back.model.arch() == ck.model.arch());
  CHECK(back.schedule == ck.schedule);
  CHECK(back.training == ck.training);
  CHECK(bitwise_equal(back.model.flat_parameters(), ck.model.flat_parameters()));

  std::ifstream in(path, std::ios::binary);
  std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  in.close();

  SUBCASE("bad magic") {
    std::string bad = bytes;
    bad[0] = 'X';
    const fs::path p = temp_file("badmagic.ckpt");
    std::ofstream(p, std::ios::binary) << bad;
    CHECK_THROWS_AS(load_checkpoint(p), CheckpointError);
  }
  SUBCASE("other version") {
    std::string bad = bytes;
    bad[kCheckpointMagic.size() - 1] = '9';
    const fs::path p = temp_file("badversion.ckpt");
    std::ofstream(p, std::ios::binary) << bad;
    try {
      load_checkpoint(p);
      FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
      CHECK(std::string(e.what()).find("version") != std::string::npos);
    }
  }
  SUBCASE("truncated payload") {
    const fs::path p = temp_file("truncated.ckpt");
    std::ofstream(p, std::ios::binary) << bytes.substr(0, bytes.size() - 12);
    try {
      load_checkpoint(p);
      FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
      CHECK(std::string(e.what()).find("payload") != std::string::npos);
    }
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_checkpoint(temp_file("does-not-exist.ckpt")), IoError);
  }
}
