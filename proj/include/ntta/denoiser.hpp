// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ntta/diffusion.hpp"

namespace ntta {

struct DenoiserArch {
  int data_dim = 2;
  int embed_dim = 8;
  int hidden_width = 128;
  int hidden_layers = 3;
  int time_frequencies = 4;
  int num_classes = 8;
  /// Timestep normaliser for the sinusoidal features.
  int total_steps = 100;

  int input_dim() const { return data_dim + 2 * time_frequencies + embed_dim; }
  void validate() const;
  bool operator==(const DenoiserArch&) const = default;
};

struct DenseLayer {
  Mat weight;  // out x in
  Vec bias;
};

/// Sinusoidal timestep features [sin(2^k pi t/T), cos(2^k pi t/T)] for k < n.
Vec time_features(int t, int total_steps, int frequencies);

/// Fully connected noise predictor eps(x_t, t, embedding) with SiLU hidden
/// layers, a per-class condition embedding table and a learnable null
/// embedding. Forward and backward passes work on column batches.
///
/// Flat parameter layout (used by the optimiser and the checkpoint format):
/// for each layer in order, weight (column-major) then bias; then the
/// condition table (embed_dim x num_classes, column-major); then the null
/// embedding.
class DenoiserModel {
 public:
  /// Activations recorded by forward() for a later backward().
  struct Tape {
    Mat input;
    std::vector<Mat> pre;   // pre-activation per hidden layer
    std::vector<Mat> post;  // SiLU output per hidden layer
  };

  struct InputGrads {
    Mat x;          // data_dim x batch
    Mat embedding;  // embed_dim x batch
  };

  DenoiserModel() = default;
  DenoiserModel(const DenoiserArch& arch, std::uint64_t init_seed);

  const DenoiserArch& arch() const { return arch_; }
  int data_dim() const { return arch_.data_dim; }
  int embed_dim() const { return arch_.embed_dim; }

  /// Batched forward; columns of x and emb are samples, t holds one timestep per column.
  Mat forward(const Mat& x, std::span<const int> t, const Mat& emb, Tape* tape = nullptr) const;

  /// Reverse-mode pass from d(loss)/d(output). Parameter gradients are
  /// accumulated into `layer_grads` when it is non-null (it must be shaped
  /// like layers(), see zero_layer_grads()).
  InputGrads backward(const Tape& tape, const Mat& grad_out,
                      std::vector<DenseLayer>* layer_grads = nullptr) const;

  std::vector<DenseLayer> zero_layer_grads() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  const Mat& condition_table() const { return condition_table_; }
  Mat& condition_table() { return condition_table_; }
  Vec condition(int label) const;

  const Vec& null_embedding() const { return null_embedding_; }
  Vec& null_embedding() { return null_embedding_; }

  std::size_t parameter_count() const;
  Vec flat_parameters() const;
  void set_flat_parameters(const Vec& flat);
  /// Packs gradients in the flat parameter layout.
  Vec flatten_gradients(const std::vector<DenseLayer>& layer_grads, const Mat& table_grad,
                        const Vec& null_grad) const;

  void set_zero();
  bool all_finite() const;

 private:
  DenoiserArch arch_;
  std::vector<DenseLayer> layers_;
  Mat condition_table_;
  Vec null_embedding_;
};

/// Single-sample noise prediction eps(x_t, t, embedding).
Vec predict_noise(const DenoiserModel& model, const LatentState& state, const Vec& embedding);

}  // namespace ntta
