// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ntta/diffusion.hpp"

namespace ntta {

enum class DatasetKind { GaussianMixture, Ring, Grid };

std::string to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(const std::string& name);

/// One isotropic Gaussian component, owned by a class label.
struct MixtureComponent {
  Vec mean;
  double stddev = 0.0;
  int label = 0;
};

/// Synthetic labelled mixture. Ring and Grid are generated layouts; a
/// GaussianMixture lists its components explicitly.
struct DatasetSpec {
  DatasetKind kind = DatasetKind::Ring;
  std::vector<MixtureComponent> components;
  int samples_per_class = 1000;
  std::uint64_t seed = 0;

  int num_classes() const;
  int data_dim() const;
  void validate() const;
};

/// `modes` components evenly spaced on a circle of `radius`, assigned to
/// `classes` labels in contiguous blocks (modes must be a multiple of classes).
DatasetSpec ring_spec(int modes, double radius, double stddev, int classes, int samples_per_class,
                      std::uint64_t seed);

/// side x side lattice centred on the origin, one class per node.
DatasetSpec grid_spec(int side, double spacing, double stddev, int samples_per_class,
                      std::uint64_t seed);

struct LabeledPoints {
  Mat points;               // data_dim x n
  std::vector<int> labels;  // class of each column
  std::vector<int> component;

  Eigen::Index size() const { return points.cols(); }
};

/// Each class gets samples_per_class points; a point picks one of its
/// class's components uniformly. Deterministic in spec.seed.
LabeledPoints generate_dataset(const DatasetSpec& spec);

/// Fraction of rows of `samples` farther than `sigmas` component standard
/// deviations from every component mean.
double off_manifold_rate(const DatasetSpec& spec, const std::vector<Vec>& samples,
                         double sigmas = 3.0);
bool is_off_manifold(const DatasetSpec& spec, const Vec& x, double sigmas = 3.0);

/// Index of the nearest component mean.
int nearest_component(const DatasetSpec& spec, const Vec& x);

}  // namespace ntta
