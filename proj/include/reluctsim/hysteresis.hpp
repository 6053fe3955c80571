#pragma once

#include <cstddef>
#include <vector>

#include "reluctsim/quadrature.hpp"

/// Generalized Preisach model (GPM) with a Cauchy-product Preisach density.
///
/// The irreversible part is a classical Preisach model evaluated through its
/// reduced memory (the staircase of past maxima and minima). The reversible
/// part is a single-valued double-exponential permeability. All free
/// functions here are pure; `Staircase` is the cached fast path used by the
/// simulator and the identification replay.
namespace reluctsim::hysteresis {

struct CauchyDist {
  double location = 0.0;  // A/m
  double scale = 1.0;     // A/m, > 0
};

double cauchy_pdf(double x, const CauchyDist& d);
double cauchy_cdf(double x, const CauchyDist& d);

/// P(alpha, beta) = f1(h_c) f2(h_m) with h_c = (alpha - beta)/2 and
/// h_m = (alpha + beta)/2. `interaction.location` must be 0 so that the major
/// loop is symmetric about the origin.
struct PreisachDistribution {
  CauchyDist coercive;     // f1, parameters m_hc, s_hc
  CauchyDist interaction;  // f2, parameters 0, s_hm

  static PreisachDistribution from(double m_hc, double s_hc, double s_hm) {
    return {{m_hc, s_hc}, {0.0, s_hm}};
  }
  void validate() const;
};

double preisach_density(double alpha, double beta, const PreisachDistribution& dist);

/// Reversible permeability mu0 + mu1 e^{-|H|/H1} + mu2 e^{-|H|/H2}.
struct RevParams {
  double mu1 = 0.0;  // H/m
  double mu2 = 0.0;  // H/m
  double h1 = 1.0;   // A/m
  double h2 = 1.0;   // A/m

  /// Infimum of mu_rev over all H (attained at 0, at the interior stationary
  /// point when mu1 and mu2 have opposite signs, or approached as |H| -> inf).
  double min_permeability() const;
  bool strictly_positive() const { return min_permeability() > 0.0; }
  void validate() const;
};

struct GpmParams {
  RevParams rev;
  PreisachDistribution dist;
  double b_irr_sat = 1.0;  // T
  double alpha0 = 1e4;     // A/m
  double beta0 = -1e4;     // A/m

  void validate() const;
};

enum class Direction { Increasing, Decreasing };

inline Direction opposite(Direction d) {
  return d == Direction::Increasing ? Direction::Decreasing : Direction::Increasing;
}

/// Reduced Preisach memory. `maxima` holds alpha_1 > alpha_2 > ... and
/// `minima` holds beta_1 < beta_2 < ..., both excluding the bounds alpha0 and
/// beta0, which live in GpmParams. Increasing input has |maxima| == |minima|,
/// decreasing input has |maxima| == |minima| + 1. The innermost extrema are
/// the back elements.
struct ExtremaHistory {
  std::vector<double> maxima;
  std::vector<double> minima;

  bool consistent_with(Direction dir) const;
  /// Throws InvalidArgument naming the first violated invariant.
  void validate(double alpha0, double beta0) const;
  bool operator==(const ExtremaHistory&) const = default;
};

// ---------------------------------------------------------------------------
// Triangle integrals and staircase edges.

/// T(alpha, beta): integral of P over the triangle with vertices
/// (beta, alpha), (alpha, alpha), (beta, beta), computed as the 1-D integral
/// in the (h_c, h_m) frame with the factor-2 Jacobian.
double triangle_integral(double alpha, double beta, const PreisachDistribution& dist,
                         const quadrature::Tolerance& tol = {});

/// Closed forms of the staircase-edge line integrals.
///   ascending:  integral_{beta_n}^{H} P(H, b) db   (dT(H, beta_n)/dH)
///   descending: integral_{H}^{alpha_n} P(a, H) da  (-dT(alpha_n, H)/dH)
/// Both are products of two Lorentzians in the integration variable and are
/// resolved by partial fractions over their complex poles.
double ascending_edge_integral(double h, double beta_n, const PreisachDistribution& dist);
double descending_edge_integral(double h, double alpha_n, const PreisachDistribution& dist);

/// Adaptive-quadrature versions of the edge integrals (reference and fallback).
double ascending_edge_integral_quadrature(double h, double beta_n,
                                          const PreisachDistribution& dist);
double descending_edge_integral_quadrature(double h, double alpha_n,
                                           const PreisachDistribution& dist);

// ---------------------------------------------------------------------------
// Model with cached normalization.

class GpmModel {
 public:
  explicit GpmModel(GpmParams params, quadrature::Tolerance tol = {});

  const GpmParams& params() const { return params_; }
  const quadrature::Tolerance& tolerance() const { return tol_; }
  double triangle(double alpha, double beta) const {
    return triangle_integral(alpha, beta, params_.dist, tol_);
  }
  /// T(alpha0, beta0).
  double t0() const { return t0_; }
  /// Extremum merge tolerance, 1e-9 (alpha0 - beta0).
  double merge_tolerance() const { return 1e-9 * (params_.alpha0 - params_.beta0); }

 private:
  GpmParams params_;
  quadrature::Tolerance tol_;
  double t0_;
};

/// Classical Preisach output from the staircase sums, recomputed from scratch.
/// Requires H in [beta0, alpha0] and H on the admissible side of the innermost
/// extremum (>= beta_n when increasing, <= alpha_n when decreasing).
double cpm_output(double h, const ExtremaHistory& hist, Direction dir, const GpmModel& model);

double b_rev(double h, const RevParams& rev);
double mu_rev(double h, const RevParams& rev);

/// B = B_rev(H) + B_irr_sat * f_CPM / T(alpha0, beta0). Outside [beta0, alpha0]
/// the irreversible part is held at saturation while B_rev keeps growing.
double gpm_b(double h, const ExtremaHistory& hist, Direction dir, const GpmModel& model);
double mu_irr(double h, const ExtremaHistory& hist, Direction dir, const GpmModel& model);
double mu_gpm(double h, const ExtremaHistory& hist, Direction dir, const GpmModel& model);

/// Limit of B/mu0 - H as H -> inf, in A/m.
double saturation_magnetization(const GpmParams& p);

// ---------------------------------------------------------------------------
// Memory maintenance.

enum class HistoryEventKind { WipeOut, Push, Merge };

struct HistoryEvent {
  HistoryEventKind kind;
  double maximum;  // the maximum involved (NaN for a merged minimum)
  double minimum;  // the minimum involved (NaN for a merged maximum)
};

struct HistoryUpdate {
  ExtremaHistory hist;
  std::vector<HistoryEvent> events;
};

/// Applies the wiping-out rule for an input at H moving in `dir`: while H has
/// reached the innermost opposite bound, the innermost (max, min) pair is
/// erased. alpha0/beta0 are never removed.
HistoryUpdate history_update(const ExtremaHistory& hist, double h, Direction dir);

/// Records the reversal at H when the input switches to `new_dir`.
/// Decreasing appends H to maxima, Increasing appends H to minima. A reversal
/// within `merge_tol` of the innermost opposite extremum cancels that
/// extremum instead (the enclosed loop is below quadrature resolution).
/// At the outer bounds the reversal is clamped: a maximum at or beyond alpha0
/// is stored as alpha0, and a minimum at or beyond beta0 with no stored minima
/// resets the memory to negative saturation.
ExtremaHistory push_extremum(const ExtremaHistory& hist, double h, Direction new_dir,
                             double alpha0, double beta0, double merge_tol);

/// Symmetric demagnetizing staircase: maxima hi - k*step and minima
/// lo + k*step for k = 1..n-1, with step = (hi - lo) / (2n). k = 0 are the
/// bounds themselves (alpha0 = hi, beta0 = lo). Increasing convention.
ExtremaHistory demag_history(std::size_t n, double lo, double hi);

// ---------------------------------------------------------------------------
// Cached fast path.

/// Extrema history plus the running staircase sums, so that evaluating
/// B and mu costs one triangle integral and one closed-form edge integral
/// regardless of memory depth. Holds a non-owning pointer to the model, which
/// must outlive it. Evaluation updates an internal cache, so one instance must
/// not be shared between threads.
class Staircase {
 public:
  Staircase(const GpmModel& model, ExtremaHistory hist, Direction dir);

  const ExtremaHistory& history() const { return hist_; }
  Direction direction() const { return dir_; }
  const GpmModel& model() const { return *model_; }

  /// Irreversible CPM output at H with frozen memory. Below the innermost
  /// minimum (increasing) or above the innermost maximum (decreasing) the
  /// output is held at the reversal value; past alpha0/beta0 it saturates.
  double cpm(double h) const;
  double b(double h) const;
  double mu_irr(double h) const;
  double mu(double h) const;

  /// Innermost bound whose crossing triggers a wipe-out in the current
  /// direction, or NaN when none exists.
  double wipe_threshold() const;

  /// history_update in place; returns the number of erased pairs.
  int wipe(double h);
  /// push_extremum in place and flip the direction.
  void reverse(double h);

  /// Quasi-static replay: moves the input to H, recording a reversal at the
  /// previous input when the direction flips and wiping out as needed.
  /// Returns B(H).
  double advance(double h);

 private:
  void rebuild();
  void push_sum();

  const GpmModel* model_;
  ExtremaHistory hist_;
  Direction dir_;
  double last_input_;
  // partial_[e] is the staircase sum after the e-th stored element in the
  // temporal order alpha_1, beta_1, alpha_2, beta_2, ...
  std::vector<double> partial_;

  // Last full evaluation of the final triangle. Nearby inputs integrate the
  // closed-form edge from here instead of redoing the 2-D triangle.
  double final_triangle(double u_eff) const;
  mutable double anchor_u_;
  mutable double anchor_t_;
  mutable int walked_;
  bool walking_;
};

}  // namespace reluctsim::hysteresis
