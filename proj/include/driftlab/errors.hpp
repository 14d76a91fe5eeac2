#pragma once

#include <stdexcept>
#include <string>

namespace driftlab {

/// Operand shapes disagree (vector vs. matrix, or two sequence elements).
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A matrix that must be symmetric positive definite is not.
class NotPositiveDefinite : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Least-squares design without full column rank.
class RankDeficient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mixing-factor calibration produced an unusable coefficient.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss or gradient.
class Divergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment configuration failed schema or value validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string shape_string(long rows, long cols);

}  // namespace driftlab
