#pragma once

#include <stdexcept>
#include <string>

namespace r2r {

/// Invalid or inconsistent experiment / model configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Vector or matrix sizes that do not match the model they are fed to.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A period index outside 1..T.
class HorizonError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Rank-deficient design or singular Gram matrix.
class SingularityError : public std::runtime_error {
 public:
  SingularityError(const std::string& what, int deficient_columns)
      : std::runtime_error(what), deficient_columns_(deficient_columns) {}
  int deficient_columns() const noexcept { return deficient_columns_; }

 private:
  int deficient_columns_;
};

/// Inputs for which the requested quantity is undefined (zero spread,
/// perfectly correlated normals, zero target coordinate, ...).
class DegenerateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Iterative procedure gave up (e.g. PGS step size halved too often).
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace r2r
