#pragma once

#include <stdexcept>
#include <string>

namespace tailrisk {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (p outside (0,1), s < 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent specification (bad parameters, unknown config keys, missing indices).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical or statistical estimation failed to produce a usable value.
class EstimationError : public Error {
 public:
  using Error::Error;
};

/// Integrability condition on a distortion function fails.
class ConditionError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

}  // namespace tailrisk
