#pragma once

#include <stdexcept>
#include <string>

namespace stcov {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: malformed files, invalid parameters, violated preconditions.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Non-finite arguments or out-of-domain lags.
class DomainError : public InputError {
 public:
  using InputError::InputError;
};

/// Numerical failure: singular models, indefinite matrices, degenerate data.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class SingularModelError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotPsdError : public NumericalError {
 public:
  NotPsdError(const std::string& what, double most_negative_pivot)
      : NumericalError(what), pivot_(most_negative_pivot) {}

  [[nodiscard]] double most_negative_pivot() const noexcept { return pivot_; }

 private:
  double pivot_;
};

class DegenerateDataError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace stcov
