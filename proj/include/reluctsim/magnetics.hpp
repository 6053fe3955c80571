#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "reluctsim/hysteresis.hpp"

/// Lumped magnetic circuit of a single-coil reluctance actuator: coil, iron
/// path, tabulated air gap and a lumped eddy-current loop.
namespace reluctsim::magnetics {

struct CoilParams {
  double resistance = 1.0;  // ohm
  int turns = 1;
};

struct CoreGeometry {
  double l_iron = 1.0;  // m, mean iron path length
  double a_iron = 1.0;  // m^2
};

struct EddyParams {
  double k_ec = 0.0;  // A/V = A s/Wb
};

struct ActuatorParams {
  CoilParams coil;
  CoreGeometry core;
  EddyParams eddy;

  void validate() const;
};

/// Air-gap reluctance vs gap length. Both columns are interpolated with
/// shape-preserving (Fritsch-Carlson / PCHIP) cubics; without a derivative
/// column the slope comes from differentiating the R interpolant. Queries up
/// to 1% of the span outside the knots are continued linearly.
class ReluctanceTable {
 public:
  struct Sample {
    double r_air;  // 1/H
    double dr_dz;  // 1/(H m)
  };

  ReluctanceTable(std::vector<double> z, std::vector<double> r_air,
                  std::optional<std::vector<double>> dr_dz = std::nullopt);

  /// CSV with header `z_m,R_air_per_H[,dR_dz_per_Hm]`.
  static ReluctanceTable load_csv(const std::filesystem::path& path);
  void save_csv(const std::filesystem::path& path) const;

  /// R0 + z / (mu0 A_g) sampled at `knots` points on [z_lo, z_hi]. A test
  /// and demo fixture, not measured valve data.
  static ReluctanceTable linear_fixture(double z_lo, double z_hi, double r0, double a_gap,
                                        int knots = 31);

  Sample operator()(double z) const;

  double z_min() const { return z_.front(); }
  double z_max() const { return z_.back(); }
  double margin() const { return 0.01 * (z_.back() - z_.front()); }
  bool has_derivative_column() const { return has_dr_; }
  const std::vector<double>& knots() const { return z_; }
  const std::vector<double>& r_values() const { return r_; }
  const std::vector<double>& dr_values() const { return dr_; }

 private:
  std::vector<double> z_, r_, dr_;
  std::vector<double> r_slope_, dr_slope_;  // PCHIP knot derivatives
  bool has_dr_;
};

ReluctanceTable::Sample reluctance(double z, const ReluctanceTable& table);

double eddy_current(double phi_dot, const EddyParams& p);

/// Field rate from the coil voltage without inverting the GPM:
///   [(N/R) v - A f R_air - H l] / [((N^2/R) + k_ec) A mu'].
/// `b` and `mu` are f_GPM and mu'_GPM at the current state. Throws
/// InvariantError for mu <= 0.
double h_field_derivative(double h, double b, double mu, double r_air, double v,
                          const ActuatorParams& p);
/// Numerator of h_field_derivative; carries its sign since the denominator is positive.
double h_drive(double h, double b, double r_air, double v, const ActuatorParams& p);

double h_field_derivative(double h, double z, const hysteresis::Staircase& s, double v,
                          const ActuatorParams& p, const ReluctanceTable& t);

/// i = (H l + phi R_air + k_ec phi_dot) / N with phi = A B, phi_dot = A mu' H_dot.
double coil_current(double h, double b, double mu, double r_air, double h_dot,
                    const ActuatorParams& p);
double coil_current(double h, double z, const hysteresis::Staircase& s, double h_dot,
                    const ActuatorParams& p, const ReluctanceTable& t);

/// Static field from measured current and flux, eddy currents neglected:
/// (N i - phi R_air) / l.
double h_static_from_measurement(double i, double phi, double r_air, const ActuatorParams& p);
double h_static_from_measurement(double i, double phi, double z, const ActuatorParams& p,
                                 const ReluctanceTable& t);

/// F_mag = -1/2 phi^2 dR_air/dz with phi = A B.
double magnetic_force(double b, double dr_dz, const ActuatorParams& p);
double magnetic_force(double h, double z, const hysteresis::Staircase& s,
                      const ActuatorParams& p, const ReluctanceTable& t);

}  // namespace reluctsim::magnetics
