#pragma once

#include <stdexcept>
#include <string>

namespace svb {

// Precondition violations surface as std::invalid_argument and support
// violations (log of a non-positive, folded data <= 0) as std::domain_error.

/// A computation produced a non-finite value.
class NumericError : public std::range_error {
 public:
  using std::range_error::range_error;
};

/// Optimisation aborted because F or its gradient stopped being finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace svb
