#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xrm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed sparse-text input. `line()` is 1-based; 0 means the input as a whole.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Data that violates a domain invariant (labels, shapes, finiteness, split sizes).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid solver or command configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite solver state, or a failed factorization.
class DivergenceError : public Error {
 public:
  DivergenceError(int iteration, const std::string& what)
      : Error("iteration " + std::to_string(iteration) + ": " + what), iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

}  // namespace xrm
