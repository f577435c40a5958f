#pragma once

#include <stdexcept>
#include <string>

namespace ocdgalp {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid hyperparameter or config value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Shape disagreement between two inputs.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Malformed input data (bad file contents, empty label set, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values during forward/backward or training.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

inline std::string dims_message(const std::string& what, std::size_t expected,
                                std::size_t actual) {
  return what + ": expected " + std::to_string(expected) + ", got " +
         std::to_string(actual);
}

}  // namespace ocdgalp
