#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Input that parses but breaks a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// File system or network failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A numeric routine could not produce a finite result.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace nr
