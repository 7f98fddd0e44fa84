#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace filtering {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// State vectors of every model are real coordinate vectors. Spectral models
// store the real and imaginary parts of their half-plane coefficients.
using Vector = VectorX<double>;
using Matrix = MatrixX<double>;
using Index = Eigen::Index;

// Raised when a trajectory produces non-finite values or a linear solve is
// singular. Callers that aggregate many trials catch it and count the trial as
// excluded.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad dimensions, invalid configuration values.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ConfigError(message);
}

}  // namespace filtering
