#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace virodyn {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (non-finite input,
/// invalid parameter record, wrong sign regime).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// State or matrix shape does not match what the operation expects.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Division by a vanishing denominator inside a right-hand side.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// State left the admissible set (T <= 0 where T must stay positive).
class AdmissibilityError : public Error {
 public:
  using Error::Error;
};

/// Root refinement, eigen-decomposition or similar iteration failed.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// Adaptive or guarded stepping shrank the step below the floor.
class StiffnessError : public Error {
 public:
  StiffnessError(const std::string& what, double time, std::size_t component)
      : Error(what), time_(time), component_(component) {}

  double time() const noexcept { return time_; }
  std::size_t component() const noexcept { return component_; }

 private:
  double time_;
  std::size_t component_;
};

/// Malformed user input (scenario files, CLI arguments).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Output file could not be opened or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace virodyn
