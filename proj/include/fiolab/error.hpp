#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace fiolab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs that violate a precondition. Raised before any compute starts.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A computation produced non-finite values or could not be resolved.
class NumericError : public Error {
 public:
  NumericError(std::string tag, const std::string& message)
      : Error(tag + ": " + message), tag_(std::move(tag)) {}

  const std::string& tag() const noexcept { return tag_; }

 private:
  std::string tag_;
};

/// Expression syntax error with a 1-based source position.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& message, int line, int column)
      : ValidationError("parse error at line " + std::to_string(line) + ", column " +
                        std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

/// Oscillatory quadrature whose phase increment per cell exceeds pi.
class UnderresolvedError : public NumericError {
 public:
  UnderresolvedError(const std::string& message, long required_points)
      : NumericError("underresolved", message), required_points_(required_points) {}

  long required_points() const noexcept { return required_points_; }

 private:
  long required_points_;
};

}  // namespace fiolab
