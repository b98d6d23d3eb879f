#pragma once

#include <stdexcept>
#include <string>

namespace ladder {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid user configuration (bad key, out-of-range hyperparameter, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation was violated at runtime.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf encountered where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable file.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent dataset content (labels out of range, mismatched shapes).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A dataset file the run depends on is not present.
class DatasetMissingError : public Error {
 public:
  using Error::Error;
};

}  // namespace ladder
