#pragma once

#include <stdexcept>
#include <string>

namespace tnirf {

// Base of every error the library throws. The CLI maps the subclasses to
// process exit codes (see tools/tnirf.cpp).
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Shape mismatch between vectors/matrices that must agree.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// A value violates a type invariant (self-loop, asymmetric undirected
/// matrix, non-finite entry, ...).
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Operation requires spectral radius < 1 and did not get it.
class StationarityError : public Error {
public:
  using Error::Error;
};

/// Numerical breakdown: non-PSD covariance, failed factorization,
/// singular regression design.
class NumericalError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  ConfigError(std::string pointer, const std::string& what)
      : Error(pointer + ": " + what), pointer_(std::move(pointer)) {}
  const std::string& pointer() const noexcept { return pointer_; }

private:
  std::string pointer_;
};

class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace tnirf
