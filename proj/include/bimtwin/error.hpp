#pragma once

#include <stdexcept>
#include <string>

namespace bimtwin {

/// Base of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document or frame.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Reference to an id that does not exist (or is of the wrong kind).
class UnknownIdError : public Error {
 public:
  using Error::Error;
};

/// Operation not permitted in the current state of an entity.
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace bimtwin
