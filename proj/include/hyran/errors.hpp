#pragma once

#include <stdexcept>
#include <string>

namespace hyran {

// Error taxonomy. Argument validation failures use std::invalid_argument
// directly; the types below cover conditions that need a distinct class.

// A configuration that the library deliberately does not support
// (e.g. fewer than two arms, a disabled experimental algorithm).
struct UnsupportedConfig : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A caller broke an operation's stated precondition.
struct ContractViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values or a failed factorization.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An input log or dataset lacks fields an operation needs.
struct InsufficientData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Internal consistency breach; indicates a library bug, not a caller error.
struct InternalInvariant : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace hyran
