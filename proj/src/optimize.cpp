#include "reluctsim/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "reluctsim/errors.hpp"

namespace reluctsim::optimize {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Unconstrained coordinate u <-> parameter x for one bound.
struct Coordinate {
  Bound b;

  bool has_lo() const { return std::isfinite(b.lo); }
  bool has_hi() const { return std::isfinite(b.hi); }

  double to_x(double u) const {
    if (has_lo() && has_hi()) {
      const double s = 1.0 / (1.0 + std::exp(-u));
      double x = b.log ? std::exp(std::log(b.lo) + (std::log(b.hi) - std::log(b.lo)) * s)
                       : b.lo + (b.hi - b.lo) * s;
      return std::clamp(x, b.lo, b.hi);
    }
    if (has_lo()) return b.lo + std::exp(u);
    if (has_hi()) return b.hi - std::exp(u);
    return b.log ? std::exp(u) : u;
  }

  double to_u(double x) const {
    if (has_lo() && has_hi()) {
      double s = b.log ? (std::log(x) - std::log(b.lo)) / (std::log(b.hi) - std::log(b.lo))
                       : (x - b.lo) / (b.hi - b.lo);
      s = std::clamp(s, 1e-12, 1.0 - 1e-12);
      return std::log(s / (1.0 - s));
    }
    const double floor = 1e-12 * std::max(1.0, std::abs(x));
    if (has_lo()) return std::log(std::max(x - b.lo, floor));
    if (has_hi()) return std::log(std::max(b.hi - x, floor));
    return b.log ? std::log(x) : x;
  }

  // Identity coordinates get a simplex scaled to the point.
  double step(double u, double base) const {
    if (!has_lo() && !has_hi() && !b.log) return base * std::max(1.0, std::abs(u));
    return base;
  }
};

struct Problem {
  const Objective& f;
  std::vector<Coordinate> coords;
  int evaluations = 0;

  std::vector<double> to_x(const std::vector<double>& u) const {
    std::vector<double> x(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) x[j] = coords[j].to_x(u[j]);
    return x;
  }

  double operator()(const std::vector<double>& u) {
    ++evaluations;
    const double v = f(to_x(u));
    return std::isfinite(v) ? v : kInf;
  }
};

struct RunResult {
  std::vector<double> u;
  double f;
  int iterations;
  bool converged;
};

RunResult nelder_mead(Problem& p, std::vector<double> u0, double f0, const Options& opt,
                      std::mt19937_64& rng, bool randomize) {
  const std::size_t n = u0.size();
  std::vector<std::vector<double>> simplex(n + 1, u0);
  std::vector<double> fv(n + 1, f0);
  std::uniform_int_distribution<int> coin(0, 1);
  for (std::size_t j = 0; j < n; ++j) {
    double h = p.coords[j].step(u0[j], opt.initial_step);
    if (randomize && coin(rng)) h = -h;
    simplex[j + 1][j] += h;
    fv[j + 1] = p(simplex[j + 1]);
  }

  std::vector<std::size_t> order(n + 1);
  auto sort = [&]() {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
  };
  auto point = [&](const std::vector<double>& c, const std::vector<double>& w, double s) {
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = c[j] + s * (w[j] - c[j]);
    return out;
  };

  int it = 0;
  bool converged = false;
  for (; it < opt.max_iter; ++it) {
    sort();
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

    double x_spread = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
      for (std::size_t j = 0; j < n; ++j) {
        const double d = std::abs(simplex[k][j] - simplex[best][j]);
        x_spread = std::max(x_spread, d / std::max(1.0, std::abs(simplex[best][j])));
      }
    }
    const double f_spread = fv[worst] - fv[best];
    const bool f_ok = f_spread <= opt.f_rel_tol * std::abs(fv[best]) || f_spread == 0.0;
    if ((x_spread <= opt.x_rel_tol && f_ok) || x_spread <= 1e-3 * opt.x_rel_tol) {
      converged = true;
      break;
    }

    std::vector<double> c(n, 0.0);
    for (std::size_t k = 0; k <= n; ++k) {
      if (k == worst) continue;
      for (std::size_t j = 0; j < n; ++j) c[j] += simplex[k][j] / static_cast<double>(n);
    }
    const auto xr = point(c, simplex[worst], -1.0);
    const double fr = p(xr);
    if (fr < fv[best]) {
      const auto xe = point(c, simplex[worst], -2.0);
      const double fe = p(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        fv[worst] = fe;
      } else {
        simplex[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      simplex[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    const auto xc = outside ? point(c, xr, 0.5) : point(c, simplex[worst], 0.5);
    const double fc = p(xc);
    if (fc < std::min(fr, fv[worst])) {
      simplex[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t k = 0; k <= n; ++k) {
      if (k == best) continue;
      simplex[k] = point(simplex[best], simplex[k], 0.5);
      fv[k] = p(simplex[k]);
    }
  }
  sort();
  return {simplex[order.front()], fv[order.front()], it, converged};
}

}  // namespace

FitResult minimize(const Objective& f, const std::vector<double>& x0,
                   const std::vector<Bound>& bounds, const Options& opt) {
  if (x0.empty()) throw InvalidArgument("minimize needs at least one parameter");
  if (bounds.size() != x0.size()) throw InvalidArgument("one bound per parameter is required");
  if (opt.max_iter < 1 || opt.restarts < 0 || !(opt.initial_step > 0.0)) {
    throw InvalidArgument("invalid optimizer options");
  }
  Problem p{f, {}};
  for (std::size_t j = 0; j < x0.size(); ++j) {
    const Bound& b = bounds[j];
    if (!(b.lo < b.hi)) throw InvalidArgument("bound " + std::to_string(j) + " has lo >= hi");
    if (b.log && !(b.lo > 0.0 || (!std::isfinite(b.lo) && !std::isfinite(b.hi)))) {
      throw InvalidArgument("log-scaled bound " + std::to_string(j) + " needs lo > 0");
    }
    if (!std::isfinite(x0[j]) || x0[j] < b.lo || x0[j] > b.hi) {
      throw InvalidArgument("initial point component " + std::to_string(j) +
                            " is not finite or outside its bounds");
    }
    p.coords.push_back({b});
  }

  std::vector<double> u(x0.size());
  for (std::size_t j = 0; j < x0.size(); ++j) u[j] = p.coords[j].to_u(x0[j]);

  FitResult r;
  r.initial_objective = f(x0);
  ++p.evaluations;
  if (!std::isfinite(r.initial_objective)) {
    throw InvalidArgument("objective is not finite at the initial point");
  }
  // The mapped start can differ from x0 by rounding; keep whichever is better.
  double fu = p(u);
  std::vector<double> best_x = x0;
  double best_f = r.initial_objective;

  std::mt19937_64 rng(opt.seed);
  bool converged = false;
  for (int run = 0; run <= opt.restarts; ++run) {
    const double before = fu;
    RunResult rr = nelder_mead(p, u, fu, opt, rng, run > 0);
    r.iterations += rr.iterations;
    converged = rr.converged;
    u = rr.u;
    fu = rr.f;
    if (fu < best_f) {
      best_f = fu;
      best_x = p.to_x(u);
    }
    if (run > 0 && before - fu <= opt.f_rel_tol * std::abs(before)) break;
  }

  r.x = best_x;
  r.objective = best_f;
  r.evaluations = p.evaluations;
  r.converged = converged;
  r.message = converged ? "converged" : "iteration limit reached";
  return r;
}

}  // namespace reluctsim::optimize
