#pragma once

#include <stdexcept>
#include <string>

namespace membrane {

// Non-convergence, residual checks, violated numerical preconditions.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A construction declined because its hypothesis does not hold for the input
// (e.g. a type-I bad box next to the cut-off annulus).
class Refused : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace membrane
