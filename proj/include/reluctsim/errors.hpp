#pragma once

#include <stdexcept>
#include <string>

namespace reluctsim {

/// Bad argument or violated precondition (maps to CLI exit code 2).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed to reach its tolerance.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model invariant was breached at run time (e.g. non-positive permeability).
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& message);
void require_finite(double value, const char* what);

}  // namespace reluctsim
