#pragma once

#include <stdexcept>
#include <string>

namespace curilqr {

// Bad arguments: dimension mismatches, empty datasets, invalid configuration.
struct InvalidInput : std::invalid_argument {
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical failures: non-PD mass matrix, Cholesky breakdown after jitter
// escalation, NaN torques during execution.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Using an object before it is ready (e.g. predicting with an unfitted model).
struct StateError : std::logic_error {
  explicit StateError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace curilqr
