#include "reluctsim/errors.hpp"

#include <cmath>

namespace reluctsim {

void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) throw InvalidArgument(std::string(what) + " must be finite");
}

}  // namespace reluctsim
