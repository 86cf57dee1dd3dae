#pragma once

#include <stdexcept>
#include <string>

namespace gmto {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A raster or mesh resolution outside the supported range.
class ResolutionError : public Error {
public:
  using Error::Error;
};

/// Unknown microstructure id or catalog entry.
class LookupError : public Error {
public:
  using Error::Error;
};

/// A documented invariant was violated by an input (e.g. a non-simplex rho).
class InvariantError : public Error {
public:
  using Error::Error;
};

/// Mismatched sizes between arguments.
class ContractError : public Error {
public:
  using Error::Error;
};

/// Too few samples to fit the requested model.
class InsufficientDataError : public Error {
public:
  using Error::Error;
};

/// Factorization of a stiffness system failed.
class SingularSystemError : public Error {
public:
  using Error::Error;
};

/// NaN or Inf encountered in a forward or backward pass.
class NumericError : public Error {
public:
  using Error::Error;
};

/// Malformed file (database, catalog, checkpoint).
class FormatError : public Error {
public:
  using Error::Error;
};

/// Invalid configuration document. `line()` is 1-based, 0 when unknown.
class ConfigError : public Error {
public:
  ConfigError(const std::string& message, int line);
  int line() const noexcept { return line_; }

private:
  int line_;
};

}  // namespace gmto
