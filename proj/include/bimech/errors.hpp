#pragma once

#include <stdexcept>
#include <string>

namespace bimech {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched dimensions or malformed inputs.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// A value outside the domain of an operation (unknown type, zero probability, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An instance too large for an exhaustive routine.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or degenerate floating state inside the ellipsoid.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A decomposition that could not be reproduced within the requested precision.
class PrecisionError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// A post-condition that must hold by construction was violated.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// The ellipsoid loop exhausted its iteration budget.
class NonconvergenceError : public Error {
 public:
  NonconvergenceError(const std::string& what, std::string diagnostics_path = {})
      : Error(what), diagnostics_path_(std::move(diagnostics_path)) {}

  const std::string& diagnostics_path() const noexcept { return diagnostics_path_; }

 private:
  std::string diagnostics_path_;
};

}  // namespace bimech
