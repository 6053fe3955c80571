#include "reluctsim/hysteresis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>

#include "reluctsim/constants.hpp"
#include "reluctsim/errors.hpp"

namespace reluctsim::hysteresis {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_scale(const CauchyDist& d) {
  if (!(d.scale > 0.0) || !std::isfinite(d.scale) || !std::isfinite(d.location)) {
    throw InvalidArgument("Cauchy scale must be positive and finite");
  }
}

// (F(x1) - F(x2)) for a Cauchy CDF, without cancellation when both tails
// agree. With 1 + ab > 0 the difference of arctangents is the arctangent of
// the ratio; otherwise a and b have opposite signs and nothing cancels.
double cdf_difference(double x1, double x2, const CauchyDist& d) {
  const double a = (x1 - d.location) / d.scale;
  const double b = (x2 - d.location) / d.scale;
  const double den = 1.0 + a * b;
  if (den > 0.0) return std::atan((a - b) / den) / kPi;
  return (std::atan(a) - std::atan(b)) / kPi;
}

// integral_lo^hi dx / [((x - c1)^2 + a1^2) ((x - c2)^2 + a2^2)]
// via the residues of the four simple poles c1 +- i a1, c2 +- i a2. The
// conjugate pairs combine into 2 Re[...]; log(x - p) is continuous on the
// real line because Im(x - p) never changes sign.
double lorentz_pair_integral(double c1, double a1, double c2, double a2, double lo,
                             double hi) {
  using C = std::complex<double>;
  const C p1(c1, a1);
  const C p2(c2, a2);
  const C i(0.0, 1.0);
  const C r1 = 1.0 / ((2.0 * a1 * i) * (p1 - p2) * (p1 - std::conj(p2)));
  const C r2 = 1.0 / ((2.0 * a2 * i) * (p2 - p1) * (p2 - std::conj(p1)));
  auto antiderivative = [&](double x) {
    return 2.0 * std::real(r1 * std::log(C(x, 0.0) - p1) + r2 * std::log(C(x, 0.0) - p2));
  };
  return antiderivative(hi) - antiderivative(lo);
}

struct LorentzPair {
  double c1, a1, c2, a2;
  double operator()(double x) const {
    const double d1 = x - c1;
    const double d2 = x - c2;
    return 1.0 / ((d1 * d1 + a1 * a1) * (d2 * d2 + a2 * a2));
  }
};

// Dispatches between the closed form and quadrature. Short intervals and
// nearly coincident poles lose digits to cancellation in the closed form.
double edge_integral(const LorentzPair& g, double lo, double hi) {
  if (hi <= lo) return 0.0;
  const double a_min = std::min(g.a1, g.a2);
  const double pole_gap = std::hypot(g.c1 - g.c2, g.a1 - g.a2);
  if (hi - lo <= 0.25 * a_min) {
    const auto r = quadrature::gk15(g, lo, hi);
    if (r.error <= 1e-12 * std::abs(r.value)) return r.value;
  }
  if (pole_gap < 1e-3 * a_min || hi - lo <= 0.25 * a_min) {
    return quadrature::integrate(g, lo, hi, {1e-12, 0.0, 500}).value;
  }
  return lorentz_pair_integral(g.c1, g.a1, g.c2, g.a2, lo, hi);
}

// P(H, b) as a function of b, and P(a, H) as a function of a, written as
// (4 a1 a2 / pi^2) / Q(x).
LorentzPair ascending_pair(double h, const PreisachDistribution& d) {
  return {h - 2.0 * d.coercive.location, 2.0 * d.coercive.scale,
          2.0 * d.interaction.location - h, 2.0 * d.interaction.scale};
}

LorentzPair descending_pair(double h, const PreisachDistribution& d) {
  return {h + 2.0 * d.coercive.location, 2.0 * d.coercive.scale,
          2.0 * d.interaction.location - h, 2.0 * d.interaction.scale};
}

double pair_prefactor(const LorentzPair& g) { return 4.0 * g.a1 * g.a2 / (kPi * kPi); }

void require_consistent(const ExtremaHistory& hist, Direction dir) {
  if (!hist.consistent_with(dir)) {
    std::ostringstream msg;
    msg << "extrema history (" << hist.maxima.size() << " maxima, " << hist.minima.size()
        << " minima) is inconsistent with "
        << (dir == Direction::Increasing ? "increasing" : "decreasing") << " input";
    throw InvalidArgument(msg.str());
  }
}

void validate_ordering(const ExtremaHistory& hist) {
  for (std::size_t k = 1; k < hist.maxima.size(); ++k) {
    if (!(hist.maxima[k] < hist.maxima[k - 1])) {
      throw InvalidArgument("extrema history: maxima must be strictly decreasing");
    }
  }
  for (std::size_t k = 1; k < hist.minima.size(); ++k) {
    if (!(hist.minima[k] > hist.minima[k - 1])) {
      throw InvalidArgument("extrema history: minima must be strictly increasing");
    }
  }
  if (!hist.maxima.empty() && !hist.minima.empty() &&
      !(hist.minima.back() < hist.maxima.back())) {
    throw InvalidArgument("extrema history: every maximum must exceed every minimum");
  }
}

// Staircase sum excluding the final (input-dependent) triangle.
double staircase_sum(const ExtremaHistory& hist, const GpmModel& model) {
  double s = -model.t0();
  double previous_min = model.params().beta0;
  for (std::size_t k = 0; k < hist.maxima.size(); ++k) {
    const double alpha = hist.maxima[k];
    s += 2.0 * model.triangle(alpha, previous_min);
    if (k < hist.minima.size()) {
      s -= 2.0 * model.triangle(alpha, hist.minima[k]);
      previous_min = hist.minima[k];
    }
  }
  return s;
}

double innermost_min(const ExtremaHistory& hist, double beta0) {
  return hist.minima.empty() ? beta0 : hist.minima.back();
}

double innermost_max(const ExtremaHistory& hist, double alpha0) {
  return hist.maxima.empty() ? alpha0 : hist.maxima.back();
}

// Final staircase term with the held/saturated input of the fast path.
double final_term(double h, const ExtremaHistory& hist, Direction dir, const GpmModel& model) {
  const auto& p = model.params();
  if (dir == Direction::Increasing) {
    const double lo = innermost_min(hist, p.beta0);
    const double u = std::min(std::max(h, lo), p.alpha0);
    return 2.0 * model.triangle(u, lo);
  }
  const double hi = innermost_max(hist, p.alpha0);
  const double u = std::max(std::min(h, hi), p.beta0);
  return -2.0 * model.triangle(hi, u);
}

double irreversible_slope(double h, const ExtremaHistory& hist, Direction dir,
                          const GpmModel& model) {
  const auto& p = model.params();
  const double scale = 2.0 * p.b_irr_sat / model.t0();
  if (dir == Direction::Increasing) {
    const double lo = innermost_min(hist, p.beta0);
    if (h <= lo || h >= p.alpha0) return 0.0;
    return scale * ascending_edge_integral(h, lo, p.dist);
  }
  const double hi = innermost_max(hist, p.alpha0);
  if (h >= hi || h <= p.beta0) return 0.0;
  return scale * descending_edge_integral(h, hi, p.dist);
}

}  // namespace

// ---------------------------------------------------------------------------

double cauchy_pdf(double x, const CauchyDist& d) {
  require_finite(x, "Cauchy argument");
  require_scale(d);
  const double z = (x - d.location) / d.scale;
  return 1.0 / (kPi * d.scale * (1.0 + z * z));
}

double cauchy_cdf(double x, const CauchyDist& d) {
  require_scale(d);
  if (std::isnan(x)) throw InvalidArgument("Cauchy argument must not be NaN");
  if (x == std::numeric_limits<double>::infinity()) return 1.0;
  if (x == -std::numeric_limits<double>::infinity()) return 0.0;
  return 0.5 + std::atan((x - d.location) / d.scale) / kPi;
}

void PreisachDistribution::validate() const {
  require_scale(coercive);
  require_scale(interaction);
  if (interaction.location != 0.0) {
    throw InvalidArgument("Preisach interaction-field location must be 0 (symmetric loop)");
  }
}

double preisach_density(double alpha, double beta, const PreisachDistribution& dist) {
  if (alpha < beta) throw InvalidArgument("Preisach density requires alpha >= beta");
  return cauchy_pdf(0.5 * (alpha - beta), dist.coercive) *
         cauchy_pdf(0.5 * (alpha + beta), dist.interaction);
}

double RevParams::min_permeability() const {
  double lowest = std::min(kMu0, kMu0 + mu1 + mu2);
  if (mu1 * mu2 < 0.0 && h1 != h2) {
    const double ratio = -(mu2 * h1) / (mu1 * h2);
    const double h = std::log(ratio) / (1.0 / h2 - 1.0 / h1);
    if (h > 0.0 && std::isfinite(h)) {
      lowest = std::min(lowest, kMu0 + mu1 * std::exp(-h / h1) + mu2 * std::exp(-h / h2));
    }
  }
  return lowest;
}

void RevParams::validate() const {
  require_finite(mu1, "mu1");
  require_finite(mu2, "mu2");
  if (!(h1 > 0.0) || !(h2 > 0.0) || !std::isfinite(h1) || !std::isfinite(h2)) {
    throw InvalidArgument("reversible permeability: H1 and H2 must be positive");
  }
  if (!strictly_positive()) {
    throw InvalidArgument("reversible permeability must be strictly positive for every H");
  }
}

void GpmParams::validate() const {
  rev.validate();
  dist.validate();
  if (!(b_irr_sat > 0.0) || !std::isfinite(b_irr_sat)) {
    throw InvalidArgument("irreversible saturation level must be positive");
  }
  require_finite(alpha0, "alpha0");
  require_finite(beta0, "beta0");
  if (!(beta0 < alpha0)) throw InvalidArgument("Preisach bounds require beta0 < alpha0");
}

bool ExtremaHistory::consistent_with(Direction dir) const {
  return dir == Direction::Increasing ? maxima.size() == minima.size()
                                      : maxima.size() == minima.size() + 1;
}

void ExtremaHistory::validate(double alpha0, double beta0) const {
  validate_ordering(*this);
  for (double a : maxima) {
    if (!(a <= alpha0 && a > beta0)) {
      throw InvalidArgument("extrema history: maxima must lie within (beta0, alpha0]");
    }
  }
  for (double b : minima) {
    if (!(b >= beta0 && b < alpha0)) {
      throw InvalidArgument("extrema history: minima must lie within [beta0, alpha0)");
    }
  }
  if (!consistent_with(Direction::Increasing) && !consistent_with(Direction::Decreasing)) {
    throw InvalidArgument("extrema history: cardinality must satisfy |B| = |A| or |A| - 1");
  }
}

// ---------------------------------------------------------------------------

double triangle_integral(double alpha, double beta, const PreisachDistribution& dist,
                         const quadrature::Tolerance& tol) {
  if (!std::isfinite(alpha) || !std::isfinite(beta)) {
    throw InvalidArgument("triangle integral bounds must be finite");
  }
  if (alpha < beta) throw InvalidArgument("triangle integral requires alpha >= beta");
  if (alpha == beta) return 0.0;
  const CauchyDist f1 = dist.coercive;
  const CauchyDist f2 = dist.interaction;
  const double inv_pi_s1 = 1.0 / (kPi * f1.scale);
  auto integrand = [&](double hc) {
    const double z = (hc - f1.location) / f1.scale;
    return inv_pi_s1 / (1.0 + z * z) * cdf_difference(alpha - hc, beta + hc, f2);
  };
  // Start from panels split at the f1 peak and where either CDF argument
  // crosses the f2 location; each piece is then smooth on its own scale.
  const double end = 0.5 * (alpha - beta);
  double points[5] = {0.0, f1.location, alpha - f2.location, f2.location - beta, end};
  for (int k = 1; k < 4; ++k) points[k] = std::clamp(points[k], 0.0, end);
  std::sort(points + 1, points + 4);
  return 2.0 * quadrature::integrate_points(integrand, points, 5, tol).value;
}

double ascending_edge_integral(double h, double beta_n, const PreisachDistribution& dist) {
  if (h <= beta_n) return 0.0;
  const LorentzPair g = ascending_pair(h, dist);
  return pair_prefactor(g) * edge_integral(g, beta_n, h);
}

double descending_edge_integral(double h, double alpha_n, const PreisachDistribution& dist) {
  if (h >= alpha_n) return 0.0;
  const LorentzPair g = descending_pair(h, dist);
  return pair_prefactor(g) * edge_integral(g, h, alpha_n);
}

double ascending_edge_integral_quadrature(double h, double beta_n,
                                          const PreisachDistribution& dist) {
  if (h <= beta_n) return 0.0;
  auto f = [&](double b) { return preisach_density(h, b, dist); };
  return quadrature::integrate(f, beta_n, h, {1e-12, 0.0, 1000}).value;
}

double descending_edge_integral_quadrature(double h, double alpha_n,
                                           const PreisachDistribution& dist) {
  if (h >= alpha_n) return 0.0;
  auto f = [&](double a) { return preisach_density(a, h, dist); };
  return quadrature::integrate(f, h, alpha_n, {1e-12, 0.0, 1000}).value;
}

// ---------------------------------------------------------------------------

GpmModel::GpmModel(GpmParams params, quadrature::Tolerance tol)
    : params_(std::move(params)), tol_(tol), t0_(0.0) {
  params_.validate();
  t0_ = triangle_integral(params_.alpha0, params_.beta0, params_.dist, tol_);
  if (!(t0_ > 0.0)) throw NumericalError("Preisach normalization T(alpha0, beta0) is zero");
}

double cpm_output(double h, const ExtremaHistory& hist, Direction dir, const GpmModel& model) {
  require_finite(h, "H");
  require_consistent(hist, dir);
  const auto& p = model.params();
  if (h < p.beta0 || h > p.alpha0) {
    std::ostringstream msg;
    msg << "H = " << h << " A/m lies outside the Preisach bounds [" << p.beta0 << ", "
        << p.alpha0 << "]";
    throw InvalidArgument(msg.str());
  }
  if (dir == Direction::Increasing) {
    const double lo = innermost_min(hist, p.beta0);
    const double hi = innermost_max(hist, p.alpha0);
    if (h < lo || h > hi) {
      throw InvalidArgument("increasing input must lie between the innermost extrema");
    }
    return staircase_sum(hist, model) + 2.0 * model.triangle(h, lo);
  }
  const double hi = innermost_max(hist, p.alpha0);
  const double lo = innermost_min(hist, p.beta0);
  if (h > hi || h < lo) {
    throw InvalidArgument("decreasing input must lie between the innermost extrema");
  }
  return staircase_sum(hist, model) - 2.0 * model.triangle(hi, h);
}

double b_rev(double h, const RevParams& rev) {
  require_finite(h, "H");
  const double a = std::abs(h);
  const double sign = h < 0.0 ? -1.0 : 1.0;
  return kMu0 * h + sign * (rev.mu1 * rev.h1 * -std::expm1(-a / rev.h1) +
                            rev.mu2 * rev.h2 * -std::expm1(-a / rev.h2));
}

double mu_rev(double h, const RevParams& rev) {
  require_finite(h, "H");
  const double a = std::abs(h);
  return kMu0 + rev.mu1 * std::exp(-a / rev.h1) + rev.mu2 * std::exp(-a / rev.h2);
}

double gpm_b(double h, const ExtremaHistory& hist, Direction dir, const GpmModel& model) {
  require_finite(h, "H");
  require_consistent(hist, dir);
  const auto& p = model.params();
  const double cpm = staircase_sum(hist, model) + final_term(h, hist, dir, model);
  return b_rev(h, p.rev) + p.b_irr_sat * cpm / model.t0();
}

double mu_irr(double h, const ExtremaHistory& hist, Direction dir, const GpmModel& model) {
  require_finite(h, "H");
  require_consistent(hist, dir);
  return irreversible_slope(h, hist, dir, model);
}

double mu_gpm(double h, const ExtremaHistory& hist, Direction dir, const GpmModel& model) {
  return mu_rev(h, model.params().rev) + mu_irr(h, hist, dir, model);
}

double saturation_magnetization(const GpmParams& p) {
  return (p.rev.mu1 * p.rev.h1 + p.rev.mu2 * p.rev.h2 + p.b_irr_sat) / kMu0;
}

// ---------------------------------------------------------------------------

HistoryUpdate history_update(const ExtremaHistory& hist, double h, Direction dir) {
  require_finite(h, "H");
  validate_ordering(hist);
  require_consistent(hist, dir);
  HistoryUpdate out{hist, {}};
  auto& mx = out.hist.maxima;
  auto& mn = out.hist.minima;
  if (dir == Direction::Increasing) {
    while (!mx.empty() && h >= mx.back()) {
      out.events.push_back({HistoryEventKind::WipeOut, mx.back(), mn.back()});
      mx.pop_back();
      mn.pop_back();
    }
  } else {
    while (!mn.empty() && h <= mn.back()) {
      out.events.push_back({HistoryEventKind::WipeOut, mx.back(), mn.back()});
      mx.pop_back();
      mn.pop_back();
    }
  }
  return out;
}

ExtremaHistory push_extremum(const ExtremaHistory& hist, double h, Direction new_dir,
                             double alpha0, double beta0, double merge_tol) {
  require_finite(h, "H");
  const Direction old_dir = opposite(new_dir);
  require_consistent(hist, old_dir);
  h = std::clamp(h, beta0, alpha0);
  ExtremaHistory out = hist;

  if (new_dir == Direction::Decreasing) {
    const double lower = innermost_min(hist, beta0);
    const double upper = innermost_max(hist, alpha0);
    if (!out.minima.empty() && std::abs(h - lower) <= merge_tol) {
      out.minima.pop_back();
      return out;
    }
    if (h < lower - merge_tol) {
      throw InvalidArgument("new maximum lies below the innermost minimum");
    }
    if (h >= upper) {
      if (!out.maxima.empty()) {
        throw InvalidArgument("new maximum reaches the innermost maximum; wipe out first");
      }
      out.maxima.push_back(alpha0);
      return out;
    }
    out.maxima.push_back(std::max(h, lower));
    return out;
  }

  const double upper = innermost_max(hist, alpha0);
  const double lower = innermost_min(hist, beta0);
  if (std::abs(upper - h) <= merge_tol) {
    out.maxima.pop_back();
    return out;
  }
  if (h > upper + merge_tol) {
    throw InvalidArgument("new minimum lies above the innermost maximum");
  }
  if (h <= lower) {
    if (!out.minima.empty()) {
      throw InvalidArgument("new minimum reaches the innermost minimum; wipe out first");
    }
    // Every hysteron is off: negative saturation, increasing with empty memory.
    out.maxima.clear();
    return out;
  }
  out.minima.push_back(h);
  return out;
}

ExtremaHistory demag_history(std::size_t n, double lo, double hi) {
  if (n == 0) throw InvalidArgument("demagnetizing staircase needs n >= 1");
  require_finite(lo, "demag range lower bound");
  require_finite(hi, "demag range upper bound");
  if (!(lo < hi)) throw InvalidArgument("demagnetizing range must satisfy lo < hi");
  const double step = (hi - lo) / (2.0 * static_cast<double>(n));
  ExtremaHistory hist;
  hist.maxima.reserve(n - 1);
  hist.minima.reserve(n - 1);
  for (std::size_t k = 1; k < n; ++k) {
    hist.maxima.push_back(hi - step * static_cast<double>(k));
    hist.minima.push_back(lo + step * static_cast<double>(k));
  }
  return hist;
}

// ---------------------------------------------------------------------------

Staircase::Staircase(const GpmModel& model, ExtremaHistory hist, Direction dir)
    : model_(&model),
      hist_(std::move(hist)),
      dir_(dir),
      last_input_(kNaN),
      anchor_u_(kNaN),
      anchor_t_(0.0),
      walked_(0),
      walking_(false) {
  hist_.validate(model.params().alpha0, model.params().beta0);
  require_consistent(hist_, dir_);
  rebuild();
}

void Staircase::rebuild() {
  anchor_u_ = kNaN;
  partial_.clear();
  partial_.reserve(hist_.maxima.size() + hist_.minima.size());
  const std::size_t total = hist_.maxima.size() + hist_.minima.size();
  while (partial_.size() < total) push_sum();
}

void Staircase::push_sum() {
  const std::size_t e = partial_.size();
  const double previous = e == 0 ? -model_->t0() : partial_.back();
  const double beta0 = model_->params().beta0;
  if (e % 2 == 0) {
    const std::size_t k = e / 2;
    const double prev_min = k == 0 ? beta0 : hist_.minima[k - 1];
    partial_.push_back(previous + 2.0 * model_->triangle(hist_.maxima[k], prev_min));
  } else {
    const std::size_t k = (e - 1) / 2;
    partial_.push_back(previous - 2.0 * model_->triangle(hist_.maxima[k], hist_.minima[k]));
  }
}

double Staircase::final_triangle(double u) const {
  const auto& p = model_->params();
  const bool up = dir_ == Direction::Increasing;
  const double edge = up ? innermost_min(hist_, p.beta0) : innermost_max(hist_, p.alpha0);
  const double reach = 0.1 * std::min(p.dist.coercive.scale, p.dist.interaction.scale);
  auto slope = [&](double s) {
    return up ? ascending_edge_integral(s, edge, p.dist) : -descending_edge_integral(s, edge, p.dist);
  };
  // 3-point Gauss-Legendre on dT/du, exact to degree 5.
  auto gl3 = [&](double a, double b) {
    static const double x3 = std::sqrt(0.6);
    const double c = 0.5 * (a + b);
    const double r = 0.5 * (b - a);
    return r * (5.0 * slope(c - x3 * r) + 8.0 * slope(c) + 5.0 * slope(c + x3 * r)) / 9.0;
  };
  if (!std::isnan(anchor_u_)) {
    const double d = std::abs(u - anchor_u_);
    if (d == 0.0) return anchor_t_;
    if (d <= reach) return anchor_t_ + gl3(anchor_u_, u);
    // Replay: walk the anchor along in panels, refreshing it exactly now and then.
    const int panels = static_cast<int>(std::ceil(d / reach));
    if (walking_ && panels <= 4 && walked_ < 16) {
      double t = anchor_t_;
      for (int k = 0; k < panels; ++k) {
        const double a = anchor_u_ + (u - anchor_u_) * k / panels;
        const double b = k + 1 == panels ? u : anchor_u_ + (u - anchor_u_) * (k + 1) / panels;
        t += gl3(a, b);
      }
      anchor_u_ = u;
      anchor_t_ = t;
      ++walked_;
      return t;
    }
  }
  anchor_u_ = u;
  anchor_t_ = up ? model_->triangle(u, edge) : model_->triangle(edge, u);
  walked_ = 0;
  return anchor_t_;
}

double Staircase::cpm(double h) const {
  const auto& p = model_->params();
  const double base = partial_.empty() ? -model_->t0() : partial_.back();
  if (dir_ == Direction::Increasing) {
    const double lo = innermost_min(hist_, p.beta0);
    return base + 2.0 * final_triangle(std::min(std::max(h, lo), p.alpha0));
  }
  const double hi = innermost_max(hist_, p.alpha0);
  return base - 2.0 * final_triangle(std::max(std::min(h, hi), p.beta0));
}

double Staircase::b(double h) const {
  const auto& p = model_->params();
  return b_rev(h, p.rev) + p.b_irr_sat * cpm(h) / model_->t0();
}

double Staircase::mu_irr(double h) const { return irreversible_slope(h, hist_, dir_, *model_); }

double Staircase::mu(double h) const { return mu_rev(h, model_->params().rev) + mu_irr(h); }

double Staircase::wipe_threshold() const {
  if (dir_ == Direction::Increasing) {
    return hist_.maxima.empty() ? kNaN : hist_.maxima.back();
  }
  return hist_.minima.empty() ? kNaN : hist_.minima.back();
}

int Staircase::wipe(double h) {
  int pairs = 0;
  auto& mx = hist_.maxima;
  auto& mn = hist_.minima;
  if (dir_ == Direction::Increasing) {
    while (!mx.empty() && h >= mx.back()) {
      mx.pop_back();
      mn.pop_back();
      ++pairs;
    }
  } else {
    while (!mn.empty() && h <= mn.back()) {
      mx.pop_back();
      mn.pop_back();
      ++pairs;
    }
  }
  partial_.resize(partial_.size() - 2 * static_cast<std::size_t>(pairs));
  if (pairs > 0) anchor_u_ = kNaN;
  return pairs;
}

void Staircase::reverse(double h) {
  const auto& p = model_->params();
  const std::size_t before = hist_.maxima.size() + hist_.minima.size();
  hist_ = push_extremum(hist_, h, opposite(dir_), p.alpha0, p.beta0, model_->merge_tolerance());
  dir_ = opposite(dir_);
  anchor_u_ = kNaN;
  const std::size_t after = hist_.maxima.size() + hist_.minima.size();
  if (after == before + 1) {
    push_sum();
  } else if (after + 1 == before) {
    partial_.pop_back();
  } else {
    rebuild();
  }
}

double Staircase::advance(double h) {
  require_finite(h, "H");
  if (!std::isnan(last_input_)) {
    const bool flips = dir_ == Direction::Increasing ? h < last_input_ : h > last_input_;
    if (flips) reverse(last_input_);
  }
  wipe(h);
  last_input_ = h;
  walking_ = true;
  const double out = b(h);
  walking_ = false;
  return out;
}

}  // namespace reluctsim::hysteresis
