// ctccrf/common.h

#ifndef CTCCRF_COMMON_H_
#define CTCCRF_COMMON_H_

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace ctccrf {

/// Dense row-major matrix used for features, node potentials and gradients.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// Base class of everything this library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad files, symbols outside a table, inconsistent shapes.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A computation produced NaN, diverged, or has no finite answer.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// log(exp(a) + exp(b)) with exact handling of -inf.
inline double LogAdd(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kLogZero) return a;
  return a + std::log1p(std::exp(b - a));
}

}  // namespace ctccrf

#endif  // CTCCRF_COMMON_H_
