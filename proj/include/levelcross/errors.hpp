#pragma once

#include <stdexcept>
#include <string>

namespace lcx {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Argument outside an operation's domain (e.g. negative lag).
struct DomainError : Error {
  using Error::Error;
};

// Invalid constructor parameters.
struct ParameterError : Error {
  using Error::Error;
};

struct SingularParameterError : ParameterError {
  using ParameterError::ParameterError;
};

// r0^2 - r^2 not resolvable at this lag.
struct DegenerateLagError : Error {
  using Error::Error;
};

struct IntegrationError : Error {
  IntegrationError(const std::string& what, double abscissa) : Error(what), abscissa(abscissa) {}
  double abscissa;
};

struct ConvergenceError : Error {
  using Error::Error;
};

struct ValidityError : Error {
  using Error::Error;
};

struct NegativeVarianceError : Error {
  using Error::Error;
};

struct SimulationError : Error {
  using Error::Error;
};

}  // namespace lcx
