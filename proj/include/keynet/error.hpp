#pragma once

#include <stdexcept>
#include <string>

namespace keynet {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be opened, read, or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// File contents violate the container or record layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// File is well-formed but uses an encoding we do not decode.
class UnsupportedFormat : public Error {
 public:
  using Error::Error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Tensor or parameter shapes disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf encountered where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace keynet
