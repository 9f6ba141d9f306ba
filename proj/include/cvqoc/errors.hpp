#pragma once

#include <stdexcept>
#include <string>

namespace cvqoc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidCutoff : public Error {
 public:
  using Error::Error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A documented precondition on an argument was violated (e.g. non-Hermitian observable).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Evaluation point outside the morphed time domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A constrained expression was evaluated after its free function changed.
class StaleCache : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or an unusable numerical state.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace cvqoc
