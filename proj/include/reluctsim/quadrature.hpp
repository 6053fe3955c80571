#pragma once

namespace reluctsim::quadrature {

struct Tolerance {
  double rel = 1e-9;
  double abs = 1e-15;
  int max_intervals = 500;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
};

/// Single 15-point Kronrod panel with its embedded 7-point Gauss estimate.
/// The error is |K15 - G7| with the QUADPACK rescaling by the integrand spread.
template <typename F>
Result gk15(F&& f, double a, double b);

/// Globally adaptive Gauss-Kronrod (7/15) integration on a finite interval:
/// the panel with the largest error estimate is bisected until the summed
/// estimate meets max(tol.abs, tol.rel * |integral|). Reversed bounds flip
/// the sign. Throws NumericalError when `tol.max_intervals` is exhausted.
template <typename F>
Result integrate(F&& f, double a, double b, const Tolerance& tol = {});

/// As `integrate` over [points[0], points[count-1]], starting from the panels
/// between consecutive (ascending) break points. Empty panels are skipped.
template <typename F>
Result integrate_points(F&& f, const double* points, int count, const Tolerance& tol = {});

}  // namespace reluctsim::quadrature

#include "reluctsim/quadrature_impl.hpp"
