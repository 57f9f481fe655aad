#pragma once

#include <stdexcept>
#include <string>

namespace steer {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value violates a documented precondition or type invariant.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Fringe data carries no usable information (e.g. a branch with no counts).
class Unfittable : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure; the message names the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace steer
