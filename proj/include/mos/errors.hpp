#pragma once

#include <stdexcept>
#include <string>

namespace mos {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input. `field()` holds a dotted path when the error came from a
/// config document, empty otherwise.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message, std::string field = {})
      : Error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// A matrix that should be positive definite is not (S_n <= 0 at `index`).
class NumericDomainError : public Error {
 public:
  NumericDomainError(const std::string& message, int index)
      : Error(message), index_(index) {}
  int index() const { return index_; }

 private:
  int index_;
};

/// Sufficient statistics whose covariance is numerically singular. The pair
/// names the two (0-based) signal slots with the strongest coupling.
class DegenerateStatsError : public Error {
 public:
  DegenerateStatsError(const std::string& message, int first, int second)
      : Error(message), first_(first), second_(second) {}
  int first() const { return first_; }
  int second() const { return second_; }

 private:
  int first_;
  int second_;
};

class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& message, double estimate, double achieved)
      : Error(message), estimate_(estimate), achieved_(achieved) {}
  double estimate() const { return estimate_; }
  double achieved_error() const { return achieved_; }

 private:
  double estimate_;
  double achieved_;
};

/// Assumption of a theoretical model does not hold (e.g. non-orthogonal
/// signals for the ML component distributions).
class ModelViolationError : public Error {
 public:
  using Error::Error;
};

}  // namespace mos
