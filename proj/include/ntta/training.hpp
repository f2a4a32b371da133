// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ntta/adam.hpp"
#include "ntta/dataset.hpp"
#include "ntta/denoiser.hpp"

namespace ntta {

struct TrainConfig {
  long steps = 6000;
  int batch_size = 256;
  /// Probability of replacing the class embedding with the null embedding.
  double condition_dropout = 0.1;
  AdamConfig optimizer{};
  /// Decay of the exponential moving average of the weights returned by
  /// train(); 0 returns the last iterate.
  double ema_decay = 0.995;
  std::uint64_t seed = 0;
};

struct LossGradient {
  double loss = 0.0;
  Vec gradient;  // flat parameter layout
  int dropped = 0;
};

/// Noise-prediction loss and its gradient on one batch: a timestep and a
/// standard-normal noise are drawn per example, and the class embedding is
/// swapped for the model's null embedding with probability `dropout`.
LossGradient training_gradient(const DenoiserModel& model, const Mat& points,
                               const std::vector<int>& labels, const NoiseSchedule& sched,
                               std::mt19937_64& rng, double dropout);

/// Mean of ||eps - eps_hat||^2 over the batch, using a fresh draw from `seed`.
double training_loss(const DenoiserModel& model, const Mat& points, const std::vector<int>& labels,
                     const NoiseSchedule& sched, std::uint64_t seed, double dropout = 0.1);

struct TrainResult {
  DenoiserModel model;
  std::vector<double> loss_history;
  double final_loss = 0.0;
};

/// Adam on the noise-prediction loss. Throws TrainingError on a non-finite
/// loss or parameter.
TrainResult train(DenoiserModel model, const LabeledPoints& data, const NoiseSchedule& sched,
                  const TrainConfig& config);

}  // namespace ntta
