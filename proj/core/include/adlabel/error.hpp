#pragma once

#include <stdexcept>
#include <string>

namespace adlabel {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor extents that do not fit the operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or an impossible combination of settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf encountered in a forward or backward pass.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Bad or missing input data: unreadable files, malformed manifests, etc.
class DataError : public Error {
 public:
  using Error::Error;
};

// A metric that is undefined for the given input (e.g. AUC on one class).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace adlabel
