#pragma once

#include <stdexcept>
#include <string>

namespace ottv {

/// Operands have mismatched grid size or spacing.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A solver produced a non-finite iterate or otherwise failed to make progress.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be read, parsed, or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Residual-norm calibration could not bracket the requested target.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ottv
