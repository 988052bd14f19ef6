#pragma once

#include <stdexcept>
#include <string>

namespace lodfem {

/// Base class for all lodfem errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment / mesh / solver configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Linear solver failure (non-convergence, rank deficiency, ...).
class SolveError : public Error {
public:
  using Error::Error;
};

/// File read/write failure.
class IoError : public Error {
public:
  using Error::Error;
};

/// Malformed input file; carries a 1-based line number when known.
class ParseError : public Error {
public:
  ParseError(const std::string& msg, int line)
      : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  explicit ParseError(const std::string& msg) : Error(msg), line_(0) {}
  int line() const { return line_; }

private:
  int line_;
};

}  // namespace lodfem
