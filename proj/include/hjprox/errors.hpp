#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hjprox {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t expected, std::size_t got)
      : Error("dimension mismatch: expected " + std::to_string(expected) +
              ", got " + std::to_string(got)) {}
};

class UnsupportedDimension : public Error {
 public:
  explicit UnsupportedDimension(std::size_t dim)
      : Error("unsupported dimension " + std::to_string(dim)) {}
};

/// An operation has no implementation for the requested kind or mode.
class Unsupported : public Error {
 public:
  using Error::Error;
};

/// A function evaluation produced NaN/Inf. Carries the offending point.
class NumericFailure : public Error {
 public:
  NumericFailure(const std::string& what, std::vector<double> point)
      : Error(what), point_(std::move(point)) {}
  const std::vector<double>& point() const { return point_; }

 private:
  std::vector<double> point_;
};

/// A supremum ran off to infinity (iterate left the search box).
class UnboundedConjugate : public Error {
 public:
  using Error::Error;
};

/// The requested point lies outside the range a model can reach.
class OutOfRange : public Error {
 public:
  using Error::Error;
};

/// The input does not allow the operation (e.g. x is a kink of S).
class Nondifferentiable : public Error {
 public:
  using Error::Error;
};

class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(long step, double loss)
      : Error("training diverged at step " + std::to_string(step) +
              " (loss " + std::to_string(loss) + ")"),
        step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A required input artifact (dataset, checkpoint, J source) is missing.
class DependencyMissing : public Error {
 public:
  using Error::Error;
};

}  // namespace hjprox
