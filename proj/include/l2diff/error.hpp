#pragma once

#include <stdexcept>
#include <string>

namespace l2diff {

// Base of every error thrown by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller misuse: dimension mismatch, stale handle, bad configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed text input. line() is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

// A potential or demand violates a feasibility requirement.
class FeasibilityError : public Error {
 public:
  using Error::Error;
};

// A VWF, graph or forest violates a structural invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Non-convergence, failed certificate, unbounded objective, recursion overflow.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// An oracle comparison disagreed.
class VerificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace l2diff
