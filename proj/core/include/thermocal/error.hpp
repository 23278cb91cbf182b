#pragma once

#include <stdexcept>
#include <string>

namespace thermocal {

/// Base class for every error raised by the library.
///
/// Errors fall into two families that the CLI maps onto exit codes:
/// input/validation problems (exit 2) and numerical failures (exit 1).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual bool is_input_error() const noexcept { return false; }
};

// Input / validation family.
class InputError : public Error {
 public:
  using Error::Error;
  bool is_input_error() const noexcept override { return true; }
};
class ConfigError : public InputError { using InputError::InputError; };
class ArgumentError : public InputError { using InputError::InputError; };
class ShapeError : public InputError { using InputError::InputError; };

// Numerical family.
class DomainError : public Error { using Error::Error; };
class CalibrationError : public Error { using Error::Error; };
class FitError : public CalibrationError { using CalibrationError::CalibrationError; };
class InversionError : public CalibrationError { using CalibrationError::CalibrationError; };
class OptimizationError : public Error { using Error::Error; };

}  // namespace thermocal
