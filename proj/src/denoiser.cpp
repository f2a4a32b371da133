// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "ntta/denoiser.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "ntta/errors.hpp"

namespace ntta {

namespace {

double silu(double z) { return z / (1.0 + std::exp(-z)); }

double silu_grad(double z) {
  const double s = 1.0 / (1.0 + std::exp(-z));
  return s * (1.0 + z * (1.0 - s));
}

}  // namespace

void DenoiserArch::validate() const {
  if (data_dim < 1 || embed_dim < 1 || hidden_width < 1 || hidden_layers < 1 ||
      time_frequencies < 0 || num_classes < 1 || total_steps < 1) {
    throw ConfigError("invalid denoiser architecture");
  }
}

Vec time_features(int t, int total_steps, int frequencies) {
  Vec f(2 * frequencies);
  const double tau = static_cast<double>(t) / static_cast<double>(total_steps);
  for (int k = 0; k < frequencies; ++k) {
    const double w = std::ldexp(std::numbers::pi, k);
    f[2 * k] = std::sin(w * tau);
    f[2 * k + 1] = std::cos(w * tau);
  }
  return f;
}

DenoiserModel::DenoiserModel(const DenoiserArch& arch, std::uint64_t init_seed) : arch_(arch) {
  arch_.validate();
  std::mt19937_64 rng(init_seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  int in = arch_.input_dim();
  for (int l = 0; l <= arch_.hidden_layers; ++l) {
    const bool last = l == arch_.hidden_layers;
    const int out = last ? arch_.data_dim : arch_.hidden_width;
    // He-style fan-in scaling; the output layer starts small.
    const double scale = (last ? 0.1 : 1.0) * std::sqrt(2.0 / in);
    DenseLayer layer{Mat(out, in), Vec::Zero(out)};
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = scale * normal(rng);
    layers_.push_back(std::move(layer));
    in = out;
  }
  condition_table_.resize(arch_.embed_dim, arch_.num_classes);
  for (Eigen::Index j = 0; j < condition_table_.cols(); ++j)
    for (Eigen::Index i = 0; i < condition_table_.rows(); ++i) condition_table_(i, j) = normal(rng);
  null_embedding_ = Vec::Zero(arch_.embed_dim);
}

Mat DenoiserModel::forward(const Mat& x, std::span<const int> t, const Mat& emb, Tape* tape) const {
  const Eigen::Index batch = x.cols();
  if (x.rows() != arch_.data_dim || emb.rows() != arch_.embed_dim || emb.cols() != batch ||
      static_cast<Eigen::Index>(t.size()) != batch) {
    throw ShapeError("denoiser input shape mismatch");
  }
  const int nt = 2 * arch_.time_frequencies;
  Mat input(arch_.input_dim(), batch);
  input.topRows(arch_.data_dim) = x;
  for (Eigen::Index j = 0; j < batch; ++j) {
    input.block(arch_.data_dim, j, nt, 1) =
        time_features(t[j], arch_.total_steps, arch_.time_frequencies);
  }
  input.bottomRows(arch_.embed_dim) = emb;

  if (tape) {
    tape->pre.clear();
    tape->post.clear();
  }
  Mat h = input;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    Mat z = layers_[l].weight * h;
    z.colwise() += layers_[l].bias;
    h = z.unaryExpr(&silu);
    if (tape) {
      tape->pre.push_back(std::move(z));
      tape->post.push_back(h);
    }
  }
  Mat out = layers_.back().weight * h;
  out.colwise() += layers_.back().bias;
  if (tape) tape->input = std::move(input);
  return out;
}

DenoiserModel::InputGrads DenoiserModel::backward(const Tape& tape, const Mat& grad_out,
                                                  std::vector<DenseLayer>* layer_grads) const {
  const std::size_t hidden = layers_.size() - 1;
  if (tape.pre.size() != hidden || grad_out.rows() != arch_.data_dim ||
      grad_out.cols() != tape.input.cols()) {
    throw ShapeError("backward: tape does not match gradient");
  }
  Mat g = grad_out;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Mat& below = l == 0 ? tape.input : tape.post[l - 1];
    if (layer_grads) {
      (*layer_grads)[l].weight.noalias() += g * below.transpose();
      (*layer_grads)[l].bias += g.rowwise().sum();
    }
    Mat g_below = layers_[l].weight.transpose() * g;
    if (l > 0) g_below.array() *= tape.pre[l - 1].unaryExpr(&silu_grad).array();
    g = std::move(g_below);
  }
  return InputGrads{g.topRows(arch_.data_dim), g.bottomRows(arch_.embed_dim)};
}

std::vector<DenseLayer> DenoiserModel::zero_layer_grads() const {
  std::vector<DenseLayer> grads;
  grads.reserve(layers_.size());
  for (const auto& l : layers_) {
    grads.push_back({Mat::Zero(l.weight.rows(), l.weight.cols()), Vec::Zero(l.bias.size())});
  }
  return grads;
}

Vec DenoiserModel::condition(int label) const {
  if (label < 0 || label >= arch_.num_classes) {
    throw RangeError("class label " + std::to_string(label) + " out of range");
  }
  return condition_table_.col(label);
}

std::size_t DenoiserModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n + condition_table_.size() + null_embedding_.size();
}

Vec DenoiserModel::flatten_gradients(const std::vector<DenseLayer>& layer_grads,
                                     const Mat& table_grad, const Vec& null_grad) const {
  Vec flat(parameter_count());
  Eigen::Index o = 0;
  auto put = [&](const double* data, Eigen::Index n) {
    flat.segment(o, n) = Eigen::Map<const Vec>(data, n);
    o += n;
  };
  for (const auto& l : layer_grads) {
    put(l.weight.data(), l.weight.size());
    put(l.bias.data(), l.bias.size());
  }
  put(table_grad.data(), table_grad.size());
  put(null_grad.data(), null_grad.size());
  return flat;
}

Vec DenoiserModel::flat_parameters() const {
  return flatten_gradients(layers_, condition_table_, null_embedding_);
}

void DenoiserModel::set_flat_parameters(const Vec& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count()) {
    throw ShapeError("flat parameter vector has wrong length");
  }
  Eigen::Index o = 0;
  auto take = [&](double* data, Eigen::Index n) {
    Eigen::Map<Vec>(data, n) = flat.segment(o, n);
    o += n;
  };
  for (auto& l : layers_) {
    take(l.weight.data(), l.weight.size());
    take(l.bias.data(), l.bias.size());
  }
  take(condition_table_.data(), condition_table_.size());
  take(null_embedding_.data(), null_embedding_.size());
}

void DenoiserModel::set_zero() { set_flat_parameters(Vec::Zero(parameter_count())); }

bool DenoiserModel::all_finite() const { return flat_parameters().allFinite(); }

Vec predict_noise(const DenoiserModel& model, const LatentState& state, const Vec& embedding) {
  if (state.x.size() != model.data_dim() || embedding.size() != model.embed_dim()) {
    throw ShapeError("predict_noise: dimension mismatch");
  }
  const int t = state.t;
  return model.forward(state.x, std::span<const int>(&t, 1), embedding);
}

}  // namespace ntta
