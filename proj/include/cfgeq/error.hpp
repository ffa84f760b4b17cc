#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cfgeq {

// Base of every error raised by the library. Catching this is enough to
// separate domain failures from programming errors (std::logic_error).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GrammarSyntaxError : public Error {
 public:
  GrammarSyntaxError(const std::string& what, std::size_t line, std::size_t column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class GrammarValidationError : public Error {
 public:
  using Error::Error;
};

// A -> B -> ... -> A. Such grammars have infinite ambiguity and (I - L)^-1
// does not exist, so every downstream stage refuses them.
class RenamingCycleError : public Error {
 public:
  using Error::Error;
};

class NonCancellingConstantError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class OracleUnstabilized : public Error {
 public:
  using Error::Error;
};

class OracleBudgetExceeded : public Error {
 public:
  using Error::Error;
};

class ReplayMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace cfgeq
