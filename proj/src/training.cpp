// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "ntta/training.hpp"

#include <cmath>
#include <string>

#include "ntta/errors.hpp"

namespace ntta {

LossGradient training_gradient(const DenoiserModel& model, const Mat& points,
                               const std::vector<int>& labels, const NoiseSchedule& sched,
                               std::mt19937_64& rng, double dropout) {
  const Eigen::Index batch = points.cols();
  if (batch == 0 || static_cast<Eigen::Index>(labels.size()) != batch) {
    throw ShapeError("training batch is empty or labels do not match points");
  }
  std::uniform_int_distribution<int> pick_t(1, sched.total_steps());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<int> ts(batch);
  std::vector<bool> dropped(batch);
  Mat eps(points.rows(), batch);
  Mat xt(points.rows(), batch);
  Mat emb(model.embed_dim(), batch);
  LossGradient out;
  for (Eigen::Index j = 0; j < batch; ++j) {
    ts[j] = pick_t(rng);
    for (Eigen::Index d = 0; d < eps.rows(); ++d) eps(d, j) = normal(rng);
    dropped[j] = unif(rng) < dropout;
    out.dropped += dropped[j] ? 1 : 0;
    const double ab = sched.alpha_bar(ts[j]);
    xt.col(j) = std::sqrt(ab) * points.col(j) + std::sqrt(1.0 - ab) * eps.col(j);
    emb.col(j) = dropped[j] ? model.null_embedding() : model.condition(labels[j]);
  }

  DenoiserModel::Tape tape;
  const Mat pred = model.forward(xt, ts, emb, &tape);
  const Mat diff = pred - eps;
  out.loss = diff.squaredNorm() / static_cast<double>(batch);

  auto layer_grads = model.zero_layer_grads();
  const auto in_grads = model.backward(tape, (2.0 / static_cast<double>(batch)) * diff, &layer_grads);
  Mat table_grad = Mat::Zero(model.condition_table().rows(), model.condition_table().cols());
  Vec null_grad = Vec::Zero(model.embed_dim());
  for (Eigen::Index j = 0; j < batch; ++j) {
    if (dropped[j]) {
      null_grad += in_grads.embedding.col(j);
    } else {
      table_grad.col(labels[j]) += in_grads.embedding.col(j);
    }
  }
  out.gradient = model.flatten_gradients(layer_grads, table_grad, null_grad);
  return out;
}

double training_loss(const DenoiserModel& model, const Mat& points, const std::vector<int>& labels,
                     const NoiseSchedule& sched, std::uint64_t seed, double dropout) {
  std::mt19937_64 rng(seed);
  const Eigen::Index batch = points.cols();
  if (batch == 0 || static_cast<Eigen::Index>(labels.size()) != batch) {
    throw ShapeError("training batch is empty or labels do not match points");
  }
  std::uniform_int_distribution<int> pick_t(1, sched.total_steps());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  double total = 0.0;
  for (Eigen::Index j = 0; j < batch; ++j) {
    const int t = pick_t(rng);
    Vec eps(points.rows());
    for (auto& e : eps) e = normal(rng);
    const bool drop = unif(rng) < dropout;
    const LatentState xt = forward_diffuse(points.col(j), t, eps, sched);
    const Vec pred =
        predict_noise(model, xt, drop ? model.null_embedding() : model.condition(labels[j]));
    total += (eps - pred).squaredNorm();
  }
  return total / static_cast<double>(batch);
}

TrainResult train(DenoiserModel model, const LabeledPoints& data, const NoiseSchedule& sched,
                  const TrainConfig& config) {
  if (config.steps < 0 || config.batch_size < 1) throw ConfigError("invalid training config");
  if (!(config.ema_decay >= 0.0 && config.ema_decay < 1.0)) {
    throw ConfigError("ema_decay must be in [0, 1)");
  }
  if (data.size() == 0) throw ConfigError("training dataset is empty");
  TrainResult result{std::move(model), {}, 0.0};
  if (config.steps == 0) return result;

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, data.size() - 1);
  Adam adam(config.optimizer, static_cast<Eigen::Index>(result.model.parameter_count()));
  Vec params = result.model.flat_parameters();
  Vec ema = params;
  Mat batch(data.points.rows(), config.batch_size);
  std::vector<int> labels(config.batch_size);
  result.loss_history.reserve(config.steps);

  for (long step = 0; step < config.steps; ++step) {
    for (int j = 0; j < config.batch_size; ++j) {
      const Eigen::Index i = pick(rng);
      batch.col(j) = data.points.col(i);
      labels[j] = data.labels[i];
    }
    const LossGradient lg =
        training_gradient(result.model, batch, labels, sched, rng, config.condition_dropout);
    if (!std::isfinite(lg.loss) || !lg.gradient.allFinite()) {
      throw TrainingError("training diverged at step " + std::to_string(step), step);
    }
    params -= adam.step(lg.gradient);
    if (!params.allFinite()) {
      throw TrainingError("non-finite parameter at step " + std::to_string(step), step);
    }
    result.model.set_flat_parameters(params);
    result.loss_history.push_back(lg.loss);
    if (config.ema_decay > 0.0) ema = config.ema_decay * ema + (1.0 - config.ema_decay) * params;
  }
  if (config.ema_decay > 0.0) result.model.set_flat_parameters(ema);
  // final_loss is the mean of the last 200 batch losses.
  const std::size_t tail = std::min<std::size_t>(200, result.loss_history.size());
  double sum = 0.0;
  for (std::size_t i = result.loss_history.size() - tail; i < result.loss_history.size(); ++i) {
    sum += result.loss_history[i];
  }
  result.final_loss = sum / static_cast<double>(tail);
  return result;
}

}  // namespace ntta
