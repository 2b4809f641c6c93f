#pragma once

#include <stdexcept>
#include <string>

namespace rntk {

/// Argument outside the mathematical domain of an operation (non-finite
/// input, correlation far outside [-1, 1], non-unit vector).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Gamma/Beta evaluated at a non-positive integer.
class PoleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Result would overflow the working precision.
class RangeError : public std::range_error {
 public:
  using std::range_error::range_error;
};

/// Caller violated a documented precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Kernel matrix too close to singular for the requested solve.
class IllConditionedError : public std::runtime_error {
 public:
  IllConditionedError(const std::string& what, double min_eigenvalue)
      : std::runtime_error(what), min_eigenvalue_(min_eigenvalue) {}

  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

/// Iterative training blew up.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical quadrature failed to reach the requested accuracy.
class AccuracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be read or written; the message names the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input file is readable but malformed.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rntk
