#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace solace {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on caller-supplied data was violated.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Shapes or settings do not fit together.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// A loss or activation became non-finite.
class NumericOverflow : public Error {
 public:
  NumericOverflow(std::string tensor, const std::string& what)
      : Error("numeric overflow in '" + tensor + "': " + what), tensor_(std::move(tensor)) {}

  const std::string& tensor() const noexcept { return tensor_; }

 private:
  std::string tensor_;
};

/// Malformed text input. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

}  // namespace solace
