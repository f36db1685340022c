#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace copvi {

// Base for all numeric failures raised by the engine (root-finder
// non-convergence, non-finite values, divergence of a run).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A diagonal entry of D fell below the Woodbury floor.
class DegenerateScaleError : public NumericError {
 public:
  DegenerateScaleError(std::size_t row, double value)
      : NumericError("degenerate factor scale: |d_" + std::to_string(row) +
                     "| = " + std::to_string(value) + " is below the floor"),
        row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

// The target correlation matrix became numerically singular.
class IllConditionedError : public NumericError {
 public:
  using NumericError::NumericError;
};

// Operation is not defined for the requested elliptical family.
class UnsupportedFamilyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or insufficient input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failure inside an SGA run, tagged with the step at which it happened.
class RunError : public NumericError {
 public:
  RunError(std::size_t step, const std::string& what)
      : NumericError("step " + std::to_string(step) + ": " + what),
        step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace copvi
