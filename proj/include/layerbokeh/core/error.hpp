#pragma once

#include <stdexcept>
#include <string>

namespace layerbokeh {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument does not hold.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// File system failure; the message names the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A file exists but its contents could not be decoded.
class DecodeError : public IoError {
 public:
  using IoError::IoError;
};

/// Structured document (scene JSON, manifest) is malformed. The message names
/// the offending field.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace layerbokeh
