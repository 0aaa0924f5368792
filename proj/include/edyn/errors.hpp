#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace edyn {

/// Compact rendering of a number for error messages.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numeric argument violates an operation's precondition.
class InvalidParam : public Error {
 public:
  using Error::Error;
};

class DimensionError : public InvalidParam {
 public:
  using InvalidParam::InvalidParam;
};

/// Requested matrix shape cannot be produced (e.g. more orthonormal rows than columns).
class InvalidShape : public DimensionError {
 public:
  using DimensionError::DimensionError;
};

/// Schwarzian derivative requested at (or numerically at) a critical point.
class CriticalPointError : public Error {
 public:
  using Error::Error;
};

class NoRootError : public Error {
 public:
  using Error::Error;
};

/// Orbit or training run left the bounded region.
class DivergedError : public Error {
 public:
  using Error::Error;
};

/// Trajectory too short for the empirical classifier to certify anything.
class InconclusiveError : public Error {
 public:
  using Error::Error;
};

/// Root-finding succeeded but the period-3 witness inequality did not verify.
class ConstructionFailed : public Error {
 public:
  using Error::Error;
};

class OrthogonalityError : public Error {
 public:
  using Error::Error;
};

class NoPositiveLabelError : public Error {
 public:
  using Error::Error;
};

class BracketError : public Error {
 public:
  using Error::Error;
};

class NonConvergedError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; carries the 1-based line and column.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what + " (line " + std::to_string(line) + ", column " +
              std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace edyn
