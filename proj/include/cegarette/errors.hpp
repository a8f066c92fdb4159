#pragma once

#include <stdexcept>
#include <string>

namespace cegarette {

/// Root of every exception thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arguments whose shape does not match the network (wrong input length, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A file could not be parsed. The message carries line/field context.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed data that violates a structural invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An operation was called outside its precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Raised by refinement when every abstract neuron is already a singleton.
class CannotRefine : public Error {
 public:
  using Error::Error;
};

/// The floating-point simplex could not produce a trustworthy answer.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace cegarette
