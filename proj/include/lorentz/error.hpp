#pragma once

#include <stdexcept>
#include <string>

namespace lorentz {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid or unusable scatterer/experiment configuration.
struct ConfigError : Error {
  using Error::Error;
};

// Argument outside the mathematical domain (e.g. |w| >= 1).
struct DomainError : Error {
  using Error::Error;
};

struct PreconditionError : Error {
  using Error::Error;
};

struct RangeError : Error {
  using Error::Error;
};

// Quadrature or root finding did not reach the requested accuracy.
struct NumericalError : Error {
  using Error::Error;
};

// A rejection loop exceeded its iteration budget.
struct SamplerFault : Error {
  using Error::Error;
};

struct EstimationError : Error {
  using Error::Error;
};

}  // namespace lorentz
