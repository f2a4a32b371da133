// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "ntta/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "ntta/errors.hpp"

namespace ntta {

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::GaussianMixture: return "gaussian_mixture";
    case DatasetKind::Ring: return "ring";
    case DatasetKind::Grid: return "grid";
  }
  return "unknown";
}

DatasetKind dataset_kind_from_string(const std::string& name) {
  if (name == "gaussian_mixture") return DatasetKind::GaussianMixture;
  if (name == "ring") return DatasetKind::Ring;
  if (name == "grid") return DatasetKind::Grid;
  throw ConfigError("unknown dataset kind '" + name + "'");
}

int DatasetSpec::num_classes() const {
  int n = 0;
  for (const auto& c : components) n = std::max(n, c.label + 1);
  return n;
}

int DatasetSpec::data_dim() const {
  return components.empty() ? 0 : static_cast<int>(components.front().mean.size());
}

void DatasetSpec::validate() const {
  if (components.empty()) throw ConfigError("dataset needs at least one component");
  if (samples_per_class < 1) throw ConfigError("samples_per_class must be >= 1");
  const int classes = num_classes();
  std::vector<int> per_class(classes, 0);
  for (const auto& c : components) {
    if (c.mean.size() != data_dim()) throw ConfigError("component means differ in dimension");
    if (!c.mean.allFinite()) throw ConfigError("component mean is not finite");
    if (!(std::isfinite(c.stddev) && c.stddev >= 0.0)) {
      throw ConfigError("component stddev must be finite and nonnegative");
    }
    if (c.label < 0) throw ConfigError("component label must be nonnegative");
    ++per_class[c.label];
  }
  for (int k = 0; k < classes; ++k) {
    if (per_class[k] == 0) throw ConfigError("class " + std::to_string(k) + " has no component");
  }
}

DatasetSpec ring_spec(int modes, double radius, double stddev, int classes, int samples_per_class,
                      std::uint64_t seed) {
  if (modes < 1 || classes < 1 || modes % classes != 0) {
    throw ConfigError("ring: modes must be a positive multiple of classes");
  }
  DatasetSpec spec;
  spec.kind = DatasetKind::Ring;
  spec.samples_per_class = samples_per_class;
  spec.seed = seed;
  const int per_class = modes / classes;
  for (int k = 0; k < modes; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / modes;
    Vec mean(2);
    mean << radius * std::cos(angle), radius * std::sin(angle);
    spec.components.push_back({mean, stddev, k / per_class});
  }
  return spec;
}

DatasetSpec grid_spec(int side, double spacing, double stddev, int samples_per_class,
                      std::uint64_t seed) {
  if (side < 1) throw ConfigError("grid: side must be >= 1");
  DatasetSpec spec;
  spec.kind = DatasetKind::Grid;
  spec.samples_per_class = samples_per_class;
  spec.seed = seed;
  const double offset = 0.5 * (side - 1) * spacing;
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      Vec mean(2);
      mean << i * spacing - offset, j * spacing - offset;
      spec.components.push_back({mean, stddev, i * side + j});
    }
  }
  return spec;
}

LabeledPoints generate_dataset(const DatasetSpec& spec) {
  spec.validate();
  const int classes = spec.num_classes();
  std::vector<std::vector<int>> members(classes);
  for (int i = 0; i < static_cast<int>(spec.components.size()); ++i) {
    members[spec.components[i].label].push_back(i);
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const Eigen::Index n = static_cast<Eigen::Index>(classes) * spec.samples_per_class;
  LabeledPoints out{Mat(spec.data_dim(), n), {}, {}};
  out.labels.reserve(n);
  out.component.reserve(n);
  Eigen::Index col = 0;
  for (int k = 0; k < classes; ++k) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(members[k].size()) - 1);
    for (int s = 0; s < spec.samples_per_class; ++s, ++col) {
      const int ci = members[k].size() == 1 ? members[k][0] : members[k][pick(rng)];
      const auto& comp = spec.components[ci];
      for (Eigen::Index d = 0; d < out.points.rows(); ++d) {
        out.points(d, col) = comp.mean[d] + comp.stddev * normal(rng);
      }
      out.labels.push_back(k);
      out.component.push_back(ci);
    }
  }
  return out;
}

int nearest_component(const DatasetSpec& spec, const Vec& x) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(spec.components.size()); ++i) {
    const double d = (x - spec.components[i].mean).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

bool is_off_manifold(const DatasetSpec& spec, const Vec& x, double sigmas) {
  for (const auto& c : spec.components) {
    if ((x - c.mean).norm() <= sigmas * c.stddev) return false;
  }
  return true;
}

double off_manifold_rate(const DatasetSpec& spec, const std::vector<Vec>& samples, double sigmas) {
  if (samples.empty()) return 0.0;
  const auto off = std::count_if(samples.begin(), samples.end(),
                                 [&](const Vec& x) { return is_off_manifold(spec, x, sigmas); });
  return static_cast<double>(off) / static_cast<double>(samples.size());
}

}  // namespace ntta
