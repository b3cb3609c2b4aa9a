#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace lowrank {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes of two operands do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced, or a decomposition failed.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Argument outside its documented domain (negative radius, r > min(d1, d2), ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid experiment or solver configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Output or input file could not be opened or written.
class IoError : public Error {
 public:
  using Error::Error;
};

inline std::string shape_str(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

template <typename Derived>
std::string shape_str(const Eigen::DenseBase<Derived>& m) {
  return shape_str(m.rows(), m.cols());
}

}  // namespace lowrank
