#pragma once

#include <stdexcept>
#include <string>

namespace sgphmc {

/// Bad shapes, non-positive hyperparameters, malformed config values.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// CSV / config parse failure with location.
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, long row, long column)
      : InputError(what), row_(row), column_(column) {}
  long row() const noexcept { return row_; }
  long column() const noexcept { return column_; }

 private:
  long row_;
  long column_;
};

/// A matrix factorization failed even after jitter.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& factor, double condition_estimate)
      : std::runtime_error("Cholesky factorization of " + factor +
                           " failed (condition estimate " +
                           std::to_string(condition_estimate) + ")"),
        factor_(factor),
        condition_(condition_estimate) {}
  NumericalError(const std::string& what) : std::runtime_error(what), condition_(0) {}

  const std::string& factor() const noexcept { return factor_; }
  double condition_estimate() const noexcept { return condition_; }

 private:
  std::string factor_;
  double condition_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sgphmc
