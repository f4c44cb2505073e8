#pragma once

#include <stdexcept>
#include <string>

namespace graphtext {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments, configuration or usage (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input files (CLI exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or a collapsed representation (CLI exit code 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace graphtext
