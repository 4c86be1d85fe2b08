#pragma once

#include <stdexcept>
#include <string>

namespace ptl {

// Error taxonomy shared by every module. Each maps onto one failure class
// named in the component contracts; the CLI turns them into exit codes.

/// Array shapes or vector lengths disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An object was used in the wrong lifecycle state (backward before forward,
/// sampling an empty buffer, missing checkpoint).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// NaN/Inf produced or consumed by a numeric routine.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mathematical domain violation (e.g. KL without absolute continuity).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A documented precondition on the inputs does not hold.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed external input: non-finite actions, bad files, schema mismatch.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad command line or configuration.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace ptl
