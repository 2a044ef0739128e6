#pragma once

#include <stdexcept>
#include <string>

namespace olss {

// Root of every error raised by the library. Each subclass maps onto one
// failure category so callers (the CLI in particular) can translate them to
// exit codes without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not compose.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, or a kernel that failed to converge.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A precondition on a scalar argument was violated.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Input that is well-formed but carries no usable information
// (e.g. all leverage scores zero).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Operation requested in a state that does not support it.
class StateError : public Error {
 public:
  using Error::Error;
};

// Data contents are inconsistent with the request (targets outside mask...).
class DataError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents or I/O failures.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Training diverged.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int epoch)
      : Error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

}  // namespace olss
