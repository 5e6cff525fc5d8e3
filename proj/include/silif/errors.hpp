#pragma once

#include <stdexcept>
#include <string>

namespace silif {

// error categories; all derive from std::runtime_error so callers can catch
// coarsely and the cli can map any of them to exit code 1.

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// value outside its documented domain (negative dt, lo > hi, ...)
struct ParameterRangeError : Error {
  using Error::Error;
};

// nan/inf reached a place that requires finite values
struct NumericError : Error {
  using Error::Error;
};

// zoh with a continuous rate of exactly zero has no (a_bar-1)/a form
struct SingularTransitionError : NumericError {
  using NumericError::NumericError;
};

// tensor dimensions disagree with what an operation requires
struct ShapeError : Error {
  using Error::Error;
};

// malformed or truncated serialized payload; message carries a byte offset
struct FormatError : Error {
  using Error::Error;
};

// well-formed file whose content does not fit the request (bad label ids,
// channel out of range, checkpoint/config mismatch, ...)
struct DataError : Error {
  using Error::Error;
};

// rejected run configuration; message names the offending key
struct ConfigError : Error {
  using Error::Error;
};

// a consumed tape cannot be walked twice
struct ReuseError : Error {
  using Error::Error;
};

// bad call arguments (h = 0, unknown parameter selector, ...)
struct ArgumentError : Error {
  using Error::Error;
};

}  // namespace silif
