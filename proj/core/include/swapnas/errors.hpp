#pragma once

#include <stdexcept>
#include <string>

namespace swapnas {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed user input: bad cell, bad config value, bad file contents.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Layer graph could not be wired together (shape or channel mismatch).
class AssemblyError : public Error {
 public:
  using Error::Error;
};

/// Kernel does not fit the feature map it is applied to.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A forward pass produced a NaN or infinity.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Precondition of a pure function was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Parsing of a table, cell file, tensor file or checkpoint failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A statistic is undefined for the given data (e.g. zero rank variance).
class StatisticsError : public Error {
 public:
  using Error::Error;
};

}  // namespace swapnas
