#pragma once

#include <stdexcept>
#include <string>

namespace sandkit {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file on disk does not conform to the tensor or sidecar format.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Input data violates a domain invariant (zero column, empty set, non-unit vector).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Operand shapes are incompatible.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// The computation is numerically undefined for this input (vanishing resultant,
// zero matrix, degenerate concentration).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

}  // namespace sandkit
