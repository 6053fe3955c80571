#include "reluctsim/quadrature.hpp"

#include <sstream>

#include "reluctsim/errors.hpp"

namespace reluctsim::quadrature::detail {

void throw_not_converged(double a, double b, double estimate, double error, int panels) {
  std::ostringstream msg;
  msg << "adaptive quadrature did not converge on [" << a << ", " << b << "]: estimate "
      << estimate << ", error " << error << " after " << panels << " panels";
  throw NumericalError(msg.str());
}

void throw_bad_bounds() { throw InvalidArgument("quadrature bounds must be finite"); }

}  // namespace reluctsim::quadrature::detail
