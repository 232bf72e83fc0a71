#pragma once

#include <stdexcept>
#include <string>

namespace dirimult {

// Malformed input: bad dimensions, out-of-range values, unparseable files.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A result that violates a documented invariant. Indicates a bug, not bad input.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace dirimult
