#pragma once

#include <stdexcept>
#include <string>

namespace saddle {

// Error taxonomy shared by all modules. Exit-code mapping in the CLI:
// DomainError-family -> 2, NumericalError-family -> 3, I/O and config -> 1.

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Domain / precondition violations.
struct DomainError : Error {
  using Error::Error;
};
struct ShapeMismatch : DomainError {
  using DomainError::DomainError;
};
struct NotCritical : DomainError {
  using DomainError::DomainError;
};
struct HypothesisViolated : DomainError {
  using DomainError::DomainError;
};
struct NoUnstableDirection : DomainError {
  using DomainError::DomainError;
};
struct OrderExceedsCap : DomainError {
  using DomainError::DomainError;
};
struct InsufficientTail : DomainError {
  using DomainError::DomainError;
};
struct NonpositiveValues : DomainError {
  using DomainError::DomainError;
};

// Numerical failures.
struct NumericalError : Error {
  using Error::Error;
};
struct MetricSingular : NumericalError {
  using NumericalError::NumericalError;
};
struct SearchBudgetExhausted : NumericalError {
  using NumericalError::NumericalError;
};
struct IllConditioned : NumericalError {
  using NumericalError::NumericalError;
};
struct ContractionFailure : NumericalError {
  using NumericalError::NumericalError;
};
struct RootFindFailure : NumericalError {
  using NumericalError::NumericalError;
};
struct BoxEscape : NumericalError {
  using NumericalError::NumericalError;
};
struct MaxIterations : NumericalError {
  using NumericalError::NumericalError;
};
struct OrbitOverflow : NumericalError {
  using NumericalError::NumericalError;
};

// Configuration / I/O.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace saddle
