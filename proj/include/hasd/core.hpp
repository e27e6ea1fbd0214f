#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace hasd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// A high-accuracy minimizer and its value, computed outside the method
/// under test. Used only for post-hoc gap and distance diagnostics.
struct ReferenceOptimum {
  Vector x;
  double f = 0.0;
};

/// Thrown when an argument's dimension disagrees with the objective.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when no analytic smoothness constant exists and probing failed.
class SmoothnessUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_dim(const Vector& x, Index dim, const char* what) {
  if (x.size() != dim) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(dim) +
                         ", got " + std::to_string(x.size()));
  }
}

/// Tolerance used by every invariant check: relative to `scale`, with an
/// absolute floor of 1e-10 * (1 + |scale|).
inline double tolerance(double rel, double scale) {
  const double s = std::abs(scale);
  return std::max(rel * s, 1e-10 * (1.0 + s));
}

}  // namespace hasd
