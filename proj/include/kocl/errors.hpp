#pragma once

#include <stdexcept>
#include <string>

namespace kocl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or hyperparameter (bad dimension, non-positive variance, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An argument outside the mathematical domain of an operation
/// (gamma outside [0, 1], dimension mismatch, malformed label).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-finite input or intermediate value. The operation that raised it
/// leaves its state untouched.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable input data.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace kocl
