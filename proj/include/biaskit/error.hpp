#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace biaskit {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied value or data structure breaks a documented contract
/// (overlapping lists, k larger than the dimension, unknown token...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. Carries the 1-based line number when known.
class FormatError : public Error {
 public:
  FormatError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  explicit FormatError(const std::string& what) : Error(what) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

/// Input that makes a computation undefined: zero-norm vectors, zero-variance
/// association scores, an all-zero centered matrix.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Unreadable or unwritable path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace biaskit
