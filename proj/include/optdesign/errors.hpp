#pragma once

#include <stdexcept>
#include <string>

namespace optdesign {

/// Bad input to an operation (precondition failure).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative method stopped without meeting its contract. The message
/// carries the diagnostic (last residual, volume trace, ...).
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace optdesign
