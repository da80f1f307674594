#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace priormvs {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A point lies on or behind the camera plane.
class BehindCamera : public Error {
 public:
  BehindCamera() : Error("behind camera") {}
};

/// Malformed text or binary input. `line()` is 1-based, 0 when not applicable.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& message, std::size_t line = 0)
      : Error(line == 0 ? message : "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Least-squares fit without enough support (too few inliers or no spread).
class DegenerateFit : public Error {
 public:
  explicit DegenerateFit(const std::string& message) : Error("degenerate fit: " + message) {}
};

/// A computation produced no usable data (empty valid set, empty cloud).
class EmptyInput : public Error {
 public:
  using Error::Error;
};

}  // namespace priormvs
