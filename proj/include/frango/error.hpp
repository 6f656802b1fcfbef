#pragma once

#include <stdexcept>
#include <string>

namespace frango {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Point outside the chart domain or below a base terminal.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Not enough grid nodes for the requested operation.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

// Evaluation at a singular point (e.g. base terminal with alpha < 1).
class SingularityError : public Error {
 public:
  using Error::Error;
};

// Result would leave the fractional-polynomial carrier (negative exponent).
class CarrierError : public Error {
 public:
  using Error::Error;
};

// Series did not converge within the allowed number of terms.
class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, double partial_sum, int terms)
      : Error(what), partial_sum_(partial_sum), terms_(terms) {}
  double partial_sum() const { return partial_sum_; }
  int terms() const { return terms_; }

 private:
  double partial_sum_;
  int terms_;
};

// Singular matrix where an inverse is required.
class InversionError : public Error {
 public:
  using Error::Error;
};

// Off-diagonal metric could not be split (singular vertical block).
class DecompositionError : public Error {
 public:
  using Error::Error;
};

class SingularTransformError : public Error {
 public:
  using Error::Error;
};

// Generating function degenerates where the branch does not allow it.
class GeneratorError : public Error {
 public:
  using Error::Error;
};

// Metric block changes sign / vanishes on the evaluation region.
class SignatureError : public Error {
 public:
  using Error::Error;
};

// Lagrangian with degenerate Hessian.
class RegularityError : public Error {
 public:
  using Error::Error;
};

class NoSolutionError : public Error {
 public:
  NoSolutionError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class CurveError : public Error {
 public:
  using Error::Error;
};

// Malformed input text or configuration.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace frango
