#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

/// Bounded derivative-free minimization (Nelder-Mead on transformed
/// coordinates) with restarts.
namespace reluctsim::optimize {

struct Bound {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool log = false;  // optimize log(x); requires 0 < lo
};

struct Options {
  double x_rel_tol = 1e-6;
  double f_rel_tol = 1e-9;
  int max_iter = 2000;   // per restart
  int restarts = 3;      // extra restarts from the best point
  double initial_step = 0.1;  // simplex size in transformed units
  std::uint64_t seed = 1;
};

struct FitResult {
  std::vector<double> x;
  double objective = 0.0;
  double initial_objective = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

using Objective = std::function<double(const std::vector<double>&)>;

/// Minimizes f over the box. The map between the optimizer's unconstrained
/// coordinates and x is a log (one-sided positive bounds), a logistic
/// (finite two-sided bounds, optionally in log space) or the identity, so
/// iterates never leave the bounds. Non-finite objective values count as
/// +inf except at the initial point, which throws InvalidArgument. Never
/// returns a point worse than the initial one.
FitResult minimize(const Objective& f, const std::vector<double>& x0,
                   const std::vector<Bound>& bounds, const Options& opt = {});

}  // namespace reluctsim::optimize
