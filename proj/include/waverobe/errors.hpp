#pragma once

#include <stdexcept>
#include <string>

namespace waverobe {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or insufficient input data (CLI exit code 2).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Unsupported configuration, e.g. a wavelet order outside the built table.
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

/// A requested scale range is not available in a pyramid.
class RangeError : public InputError {
 public:
  using InputError::InputError;
};

/// Too few observations for an order-statistic estimator.
class DegenerateInputError : public InputError {
 public:
  using InputError::InputError;
};

/// Numerical failure: quadrature non-convergence, singular systems (exit 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Parameter outside the mathematical domain of an operation (exit 3).
class DomainError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Log-regression failed, e.g. a zero scale estimate (exit 3).
class EstimationError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Monte-Carlo experiment failure, e.g. too many failed replications (exit 4).
class ExperimentError : public Error {
 public:
  using Error::Error;
};

}  // namespace waverobe
