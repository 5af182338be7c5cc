#pragma once

#include <stdexcept>
#include <string>

namespace ugseg {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operand shapes or parameter sets do not line up.
struct ShapeError : Error {
  using Error::Error;
};

// An argument is outside the documented domain of an operation.
struct ValueError : Error {
  using Error::Error;
};

// A computation produced (or would produce) a non-finite value.
struct NumericError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace ugseg
