#pragma once

#include <stdexcept>
#include <string>

namespace moco {

/// Raised when an operation receives arguments that violate its preconditions
/// (dimension mismatch, non-finite entries, negative radius, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative computation leaves the finite range.
class NumericDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace moco
