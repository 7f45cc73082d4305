/**
 * @file errors.hpp
 * @brief Exception taxonomy shared by every cab module.
 *
 * Two families: configuration/precondition failures (Error and most
 * subclasses) and numeric failures (NumericFailure and subclasses). The CLI
 * maps the first family to exit status 1 and the second to exit status 2.
 */
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the documented domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Schedule breaks the monotone noise-to-signal hypothesis.
class ScheduleViolation : public Error {
 public:
  using Error::Error;
};

/// Step sizes or ratios that the multistep formulas cannot use.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Operation requested in the wrong state (e.g. missing history).
class StateError : public Error {
 public:
  using Error::Error;
};

class NumericFailure : public Error {
 public:
  using Error::Error;
};

class NumericError : public NumericFailure {
 public:
  using NumericFailure::NumericFailure;
};

class DivergenceError : public NumericFailure {
 public:
  DivergenceError(std::size_t step, const std::string& what)
      : NumericFailure("divergence at step " + std::to_string(step) + ": " + what), step_(step) {}

  [[nodiscard]] std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Reference integrator gave up (step cap reached).
class StiffnessError : public NumericFailure {
 public:
  using NumericFailure::NumericFailure;
};

class StepUnderflowError : public StiffnessError {
 public:
  using StiffnessError::StiffnessError;
};

}  // namespace cab
