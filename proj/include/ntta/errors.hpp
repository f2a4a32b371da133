// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace ntta {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration values (schedule ranges, variances, weights, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix dimensions that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Timestep or index outside its valid range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// A schedule with alpha_bar == 0 where a division by it is needed.
class DegenerateScheduleError : public Error {
 public:
  using Error::Error;
};

/// A gradient was requested through a non-differentiable path.
class ModeError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, long step) : Error(what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

class AlignmentError : public Error {
 public:
  AlignmentError(const std::string& what, int timestep, int inner_step)
      : Error(what), timestep_(timestep), inner_step_(inner_step) {}
  int timestep() const noexcept { return timestep_; }
  int inner_step() const noexcept { return inner_step_; }

 private:
  int timestep_;
  int inner_step_;
};

/// Raised by the zeroth-order estimator when an objective evaluation throws.
class ObjectiveError : public Error {
 public:
  ObjectiveError(const std::string& what, int perturbation)
      : Error(what), perturbation_(perturbation) {}
  /// -1 for the unperturbed base evaluation.
  int perturbation() const noexcept { return perturbation_; }

 private:
  int perturbation_;
};

/// Checkpoint format problems: bad magic, version, truncated payload.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ntta
