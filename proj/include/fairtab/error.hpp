#pragma once

#include <stdexcept>
#include <string>

namespace fairtab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Matrix or vector dimensions disagree with what an operation expects.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data: bad CSV, schema violations, empty subgroups.
class DataError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf encountered where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Pair assignment impossible for the requested policy.
class SamplerError : public Error {
 public:
  using Error::Error;
};

/// Invalid finite distribution or violated modelling assumption.
class TheoryError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration value or file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fairtab
