#pragma once

#include <stdexcept>
#include <string>

namespace fermi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter violates its documented invariant.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// A special-function argument is outside the supported range.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Configuration file or CLI input is malformed.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical engine failed (blowup, instability, escape, failed fit).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DegenerateEnsemble : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class GridTooSmall : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InstabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class FitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Sampling of a sweep does not cover every window well enough.
class CoverageError : public Error {
 public:
  using Error::Error;
};

/// Output files no longer match the manifest.
class VerificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace fermi
