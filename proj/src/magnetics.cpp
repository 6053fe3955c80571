#include "reluctsim/magnetics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "reluctsim/constants.hpp"
#include "reluctsim/csv.hpp"
#include "reluctsim/errors.hpp"

namespace reluctsim::magnetics {

namespace {

int sign(double x) { return (x > 0) - (x < 0); }

// Fritsch-Carlson knot slopes with the weighted harmonic mean of the
// neighbouring secants (as in scipy's PchipInterpolator).
std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> d(n, 0.0);
  if (n == 2) {
    d[0] = d[1] = (y[1] - y[0]) / (x[1] - x[0]);
    return d;
  }
  std::vector<double> h(n - 1), delta(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = x[k + 1] - x[k];
    delta[k] = (y[k + 1] - y[k]) / h[k];
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (sign(delta[k - 1]) * sign(delta[k]) <= 0) continue;
    const double w1 = 2.0 * h[k] + h[k - 1];
    const double w2 = h[k] + 2.0 * h[k - 1];
    d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
  }
  auto edge = [](double h0, double h1, double m0, double m1) {
    double e = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if (sign(e) != sign(m0)) {
      e = 0.0;
    } else if (sign(m0) != sign(m1) && std::abs(e) > 3.0 * std::abs(m0)) {
      e = 3.0 * m0;
    }
    return e;
  };
  d[0] = edge(h[0], h[1], delta[0], delta[1]);
  d[n - 1] = edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  return d;
}

struct Hermite {
  double value;
  double slope;
};

Hermite hermite(const std::vector<double>& x, const std::vector<double>& y,
                const std::vector<double>& d, double z) {
  const std::size_t n = x.size();
  if (z <= x.front()) return {y.front() + d.front() * (z - x.front()), d.front()};
  if (z >= x.back()) return {y.back() + d.back() * (z - x.back()), d.back()};
  const std::size_t k =
      static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), z) - x.begin()) - 1;
  const std::size_t j = std::min(k, n - 2);
  const double h = x[j + 1] - x[j];
  const double t = (z - x[j]) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  const double value = h00 * y[j] + h10 * h * d[j] + h01 * y[j + 1] + h11 * h * d[j + 1];
  const double dh00 = 6 * t2 - 6 * t, dh10 = 3 * t2 - 4 * t + 1;
  const double dh01 = -6 * t2 + 6 * t, dh11 = 3 * t2 - 2 * t;
  const double slope =
      (dh00 * y[j] + dh01 * y[j + 1]) / h + dh10 * d[j] + dh11 * d[j + 1];
  return {value, slope};
}

}  // namespace

void ActuatorParams::validate() const {
  if (!(coil.resistance > 0.0) || !std::isfinite(coil.resistance)) {
    throw InvalidArgument("coil resistance must be positive");
  }
  if (coil.turns < 1) throw InvalidArgument("coil must have at least one turn");
  if (!(core.l_iron > 0.0) || !std::isfinite(core.l_iron)) {
    throw InvalidArgument("iron path length must be positive");
  }
  if (!(core.a_iron > 0.0) || !std::isfinite(core.a_iron)) {
    throw InvalidArgument("iron cross-section must be positive");
  }
  if (!(eddy.k_ec >= 0.0) || !std::isfinite(eddy.k_ec)) {
    throw InvalidArgument("eddy-current constant k_ec must be non-negative");
  }
}

ReluctanceTable::ReluctanceTable(std::vector<double> z, std::vector<double> r_air,
                                 std::optional<std::vector<double>> dr_dz)
    : z_(std::move(z)), r_(std::move(r_air)), has_dr_(dr_dz.has_value()) {
  if (z_.size() < 2) throw InvalidArgument("reluctance table needs at least two rows");
  if (r_.size() != z_.size()) throw InvalidArgument("reluctance table columns differ in length");
  for (std::size_t k = 0; k < z_.size(); ++k) {
    require_finite(z_[k], "reluctance table z");
    require_finite(r_[k], "reluctance table R_air");
    if (k > 0 && !(z_[k] > z_[k - 1])) {
      std::ostringstream msg;
      msg << "reluctance table: z must be strictly increasing (row " << k + 1 << ")";
      throw InvalidArgument(msg.str());
    }
    if (!(r_[k] > 0.0)) {
      std::ostringstream msg;
      msg << "reluctance table: R_air must be positive (row " << k + 1 << ")";
      throw InvalidArgument(msg.str());
    }
  }
  r_slope_ = pchip_slopes(z_, r_);
  if (has_dr_) {
    dr_ = std::move(*dr_dz);
    if (dr_.size() != z_.size()) throw InvalidArgument("reluctance table columns differ in length");
    for (double v : dr_) require_finite(v, "reluctance table dR/dz");
    dr_slope_ = pchip_slopes(z_, dr_);
  } else {
    dr_.resize(z_.size());
    for (std::size_t k = 0; k < z_.size(); ++k) dr_[k] = r_slope_[k];
  }
}

ReluctanceTable ReluctanceTable::load_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path, {"z_m", "R_air_per_H"}, {"dR_dz_per_Hm"});
  std::optional<std::vector<double>> dr;
  if (t.has("dR_dz_per_Hm")) dr = t.at("dR_dz_per_Hm");
  try {
    return ReluctanceTable(t.at("z_m"), t.at("R_air_per_H"), dr);
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

void ReluctanceTable::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << "z_m,R_air_per_H,dR_dz_per_Hm\n";
  for (std::size_t k = 0; k < z_.size(); ++k) {
    out << csv::format(z_[k]) << ',' << csv::format(r_[k]) << ',' << csv::format(dr_[k]) << '\n';
  }
}

ReluctanceTable ReluctanceTable::linear_fixture(double z_lo, double z_hi, double r0,
                                                double a_gap, int knots) {
  if (knots < 2 || !(z_hi > z_lo) || !(a_gap > 0.0) || !(r0 > 0.0)) {
    throw InvalidArgument("linear reluctance fixture needs z_lo < z_hi, r0 > 0, a_gap > 0");
  }
  std::vector<double> z(knots), r(knots), dr(knots);
  const double slope = 1.0 / (kMu0 * a_gap);
  for (int k = 0; k < knots; ++k) {
    z[k] = z_lo + (z_hi - z_lo) * k / (knots - 1);
    r[k] = r0 + z[k] * slope;
    dr[k] = slope;
  }
  return ReluctanceTable(std::move(z), std::move(r), std::move(dr));
}

ReluctanceTable::Sample ReluctanceTable::operator()(double z) const {
  require_finite(z, "gap length z");
  if (z < z_.front() - margin() || z > z_.back() + margin()) {
    std::ostringstream msg;
    msg << "gap length z = " << z << " m is outside the reluctance table span [" << z_.front()
        << ", " << z_.back() << "] (+-1% margin)";
    throw InvalidArgument(msg.str());
  }
  const Hermite r = hermite(z_, r_, r_slope_, z);
  if (has_dr_) return {r.value, hermite(z_, dr_, dr_slope_, z).value};
  return {r.value, r.slope};
}

ReluctanceTable::Sample reluctance(double z, const ReluctanceTable& table) { return table(z); }

double eddy_current(double phi_dot, const EddyParams& p) { return -p.k_ec * phi_dot; }

double h_drive(double h, double b, double r_air, double v, const ActuatorParams& p) {
  const double n = p.coil.turns;
  return (n / p.coil.resistance) * v - p.core.a_iron * b * r_air - h * p.core.l_iron;
}

double h_field_derivative(double h, double b, double mu, double r_air, double v,
                          const ActuatorParams& p) {
  if (!(mu > 0.0)) {
    std::ostringstream msg;
    msg << "incremental permeability " << mu << " H/m at H = " << h << " A/m is not positive";
    throw InvariantError(msg.str());
  }
  const double n = p.coil.turns;
  const double denom = (n * n / p.coil.resistance + p.eddy.k_ec) * p.core.a_iron * mu;
  return h_drive(h, b, r_air, v, p) / denom;
}

double h_field_derivative(double h, double z, const hysteresis::Staircase& s, double v,
                          const ActuatorParams& p, const ReluctanceTable& t) {
  return h_field_derivative(h, s.b(h), s.mu(h), t(z).r_air, v, p);
}

double coil_current(double h, double b, double mu, double r_air, double h_dot,
                    const ActuatorParams& p) {
  const double phi = p.core.a_iron * b;
  const double phi_dot = p.core.a_iron * mu * h_dot;
  return (h * p.core.l_iron + phi * r_air + p.eddy.k_ec * phi_dot) / p.coil.turns;
}

double coil_current(double h, double z, const hysteresis::Staircase& s, double h_dot,
                    const ActuatorParams& p, const ReluctanceTable& t) {
  return coil_current(h, s.b(h), s.mu(h), t(z).r_air, h_dot, p);
}

double h_static_from_measurement(double i, double phi, double r_air, const ActuatorParams& p) {
  return (p.coil.turns * i - phi * r_air) / p.core.l_iron;
}

double h_static_from_measurement(double i, double phi, double z, const ActuatorParams& p,
                                 const ReluctanceTable& t) {
  return h_static_from_measurement(i, phi, t(z).r_air, p);
}

double magnetic_force(double b, double dr_dz, const ActuatorParams& p) {
  const double phi = p.core.a_iron * b;
  return -0.5 * phi * phi * dr_dz;
}

double magnetic_force(double h, double z, const hysteresis::Staircase& s,
                      const ActuatorParams& p, const ReluctanceTable& t) {
  return magnetic_force(s.b(h), t(z).dr_dz, p);
}

}  // namespace reluctsim::magnetics
