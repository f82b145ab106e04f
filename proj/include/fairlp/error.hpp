#pragma once

#include <stdexcept>
#include <string>

namespace fairlp {

/// Malformed input files or arguments.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure failed (non-finite values, no convergence,
/// infeasible constraints).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fairlp
