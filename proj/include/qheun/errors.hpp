#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qheun {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (zero input,
/// q outside (0,1), sign-indefinite leading slice, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Text that could not be parsed; carries a 1-based line/column.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(what), line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// One or more violated parameter conditions, each named.
class ParameterError : public Error {
 public:
  explicit ParameterError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Parameters sit on a boundary the asymptotic results do not cover.
class ExcludedError : public Error {
 public:
  using Error::Error;
};

/// A leading slice lost its sign during a leading-term recursion.
class CancellationError : public Error {
 public:
  using Error::Error;
};

/// Root isolation could not resolve every root at the working precision.
class PrecisionError : public Error {
 public:
  using Error::Error;
};

/// Roots and predictions could not be paired.
class MatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace qheun
