#pragma once

#include <stdexcept>
#include <string>

namespace varopt {

/// Thrown when a caller breaks a documented precondition (bad dimensions,
/// out-of-range arguments, malformed schedules).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation cannot produce a meaningful number: degenerate
/// importance weights, a solver that fails to converge, NaN during training.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when an exact enumeration would exceed its configured size cap.
class EnumerationRefused : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace varopt
