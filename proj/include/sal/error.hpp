#pragma once

#include <stdexcept>
#include <string>

namespace sal {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid hyperparameters, run configs or CLI input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tensor shape / ParameterSet layout mismatch.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Missing files, malformed rows, bad checkpoints.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sal
