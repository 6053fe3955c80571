#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "reluctsim/constants.hpp"
#include "reluctsim/errors.hpp"
#include "reluctsim/magnetics.hpp"

using namespace reluctsim;
using namespace reluctsim::magnetics;

namespace {

ActuatorParams valve() { return fx::valve_params().actuator; }

std::filesystem::path temp_file(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / ("reluctsim_mag_" + name);
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("table reproduces its knots exactly") {
  fx::Gen g(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = g.integer(2, 12);
    std::vector<double> z(n), r(n);
    double zc = g.uniform(-1e-3, 1e-3), rc = g.uniform(1e5, 1e7);
    for (int k = 0; k < n; ++k) {
      z[k] = zc;
      r[k] = rc;
      zc += g.uniform(1e-5, 2e-4);
      rc = std::max(1.0, rc + g.uniform(-1e6, 3e6));
    }
    const ReluctanceTable t(z, r);
    for (int k = 0; k < n; ++k) CHECK(t(z[k]).r_air == r[k]);
  }
}

TEST_CASE("PCHIP adds no extrema between knots") {
  fx::Gen g(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = g.integer(3, 10);
    std::vector<double> z(n), r(n);
    for (int k = 0; k < n; ++k) {
      z[k] = k * 1e-4 + (k ? g.uniform(0.0, 5e-5) : 0.0);
      r[k] = g.uniform(1e6, 5e7);
    }
    const ReluctanceTable t(z, r);
    for (int k = 0; k + 1 < n; ++k) {
      const double lo = std::min(r[k], r[k + 1]), hi = std::max(r[k], r[k + 1]);
      for (int j = 1; j < 20; ++j) {
        const double v = t(z[k] + (z[k + 1] - z[k]) * j / 20.0).r_air;
        CHECK(v >= lo * (1 - 1e-12));
        CHECK(v <= hi * (1 + 1e-12));
      }
    }
  }
}

TEST_CASE("linear fixture slope") {
  const auto t = fx::valve_table();
  const double slope = 1.0 / (kMu0 * 12.57e-6);
  for (double z : {0.0, 1.3e-4, 4.5e-4, 0.9e-3}) {
    CHECK(t(z).dr_dz == doctest::Approx(slope).epsilon(1e-3));
    CHECK(t(z).r_air == doctest::Approx(1e7 + z * slope).epsilon(1e-12));
  }
  // Slope recovered from the R column alone when no derivative column is given.
  const ReluctanceTable bare(t.knots(), t.r_values());
  CHECK_FALSE(bare.has_derivative_column());
  for (double z : {1e-5, 3.3e-4, 8.9e-4}) {
    CHECK(bare(z).dr_dz == doctest::Approx(slope).epsilon(1e-3));
  }
}

TEST_CASE("queries outside the margin are rejected") {
  const auto t = fx::valve_table();
  CHECK_NOTHROW(t(-0.5 * t.margin()));
  CHECK_NOTHROW(t(0.9e-3 + 0.5 * t.margin()));
  CHECK_THROWS_AS(t(-2.0 * t.margin()), InvalidArgument);
  CHECK_THROWS_AS(t(0.9e-3 + 2.0 * t.margin()), InvalidArgument);
  CHECK_THROWS_AS(t(NAN), InvalidArgument);
}

TEST_CASE("table construction errors") {
  CHECK_THROWS_AS(ReluctanceTable({0.0}, {1.0}), InvalidArgument);
  CHECK_THROWS_AS(ReluctanceTable({0.0, 1.0}, {1.0}), InvalidArgument);
  CHECK_THROWS_AS(ReluctanceTable({0.0, 0.0}, {1.0, 2.0}), InvalidArgument);
  CHECK_THROWS_AS(ReluctanceTable({0.0, 1.0}, {1.0, -2.0}), InvalidArgument);
  CHECK_THROWS_AS(ReluctanceTable({0.0, 1.0}, {1.0, 2.0}, std::vector<double>{1.0}),
                  InvalidArgument);
}

TEST_CASE("table CSV round trip and diagnostics") {
  const auto t = fx::valve_table();
  const auto p = std::filesystem::temp_directory_path() / "reluctsim_mag_table.csv";
  t.save_csv(p);
  const auto u = ReluctanceTable::load_csv(p);
  CHECK(u.knots() == t.knots());
  CHECK(u.r_values() == t.r_values());
  CHECK(u.has_derivative_column());

  const auto bad = temp_file("nonmono.csv", "z_m,R_air_per_H\n0,1e7\n2e-4,2e7\n1e-4,3e7\n");
  try {
    (void)ReluctanceTable::load_csv(bad);
    FAIL("expected an error");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
  const auto junk = temp_file("junk.csv", "z_m,R_air_per_H\n0,1e7\n1e-4,abc\n");
  try {
    (void)ReluctanceTable::load_csv(junk);
    FAIL("expected an error");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("junk.csv:3:") != std::string::npos);
  }
  CHECK_THROWS_AS(ReluctanceTable::load_csv(temp_file("hdr.csv", "z,R\n0,1\n1,2\n")),
                  InvalidArgument);
  CHECK_THROWS_AS(ReluctanceTable::load_csv("/nonexistent/table.csv"), InvalidArgument);
}

TEST_CASE("eddy current") {
  CHECK(eddy_current(0.0, {1637.0}) == 0.0);
  CHECK(eddy_current(1.0, {1637.0}) == -1637.0);
}

TEST_CASE("field derivative") {
  const auto a = valve();
  // Demagnetized equilibrium: numerator vanishes.
  CHECK(h_field_derivative(0.0, 0.0, 200 * kMu0, 1.5e7, 0.0, a) == 0.0);
  CHECK(h_drive(0.0, 0.0, 1.5e7, 12.0, a) == doctest::Approx(1200.0 / 49.0 * 12.0));
  CHECK(h_field_derivative(0.0, 0.0, 200 * kMu0, 1.5e7, 12.0, a) > 0.0);
  CHECK(h_field_derivative(0.0, 0.0, 200 * kMu0, 1.5e7, -12.0, a) < 0.0);
  CHECK_THROWS_AS(h_field_derivative(0.0, 0.0, 0.0, 1.5e7, 1.0, a), InvariantError);
  CHECK_THROWS_AS(h_field_derivative(0.0, 0.0, -1.0, 1.5e7, 1.0, a), InvariantError);

  // Property: rate times the denominator returns the numerator.
  fx::Gen g(23);
  for (int k = 0; k < 200; ++k) {
    const double h = g.uniform(-1e4, 1e4), b = g.uniform(-1.5, 1.5);
    const double mu = g.uniform(1, 2000) * kMu0, r = g.uniform(1e6, 1e8), v = g.uniform(-30, 30);
    const double rate = h_field_derivative(h, b, mu, r, v, a);
    const double den = (1200.0 * 1200.0 / 49.0 + 1637.0) * a.core.a_iron * mu;
    CHECK(rate * den == doctest::Approx(h_drive(h, b, r, v, a)).epsilon(1e-12));
  }
}

TEST_CASE("coil current") {
  const auto a = valve();
  CHECK(coil_current(0.0, 0.0, 200 * kMu0, 1.5e7, 0.0, a) == 0.0);
  CHECK(coil_current(1000.0, 0.0, 200 * kMu0, 1.5e7, 0.0, a) ==
        doctest::Approx(1000.0 * 0.055 / 1200.0));
  // Eddy term: i = (H l + phi R + k_ec phi_dot) / N.
  const double mu = 300 * kMu0, hd = 1e5;
  const double i = coil_current(0.0, 0.0, mu, 1.5e7, hd, a);
  CHECK(i == doctest::Approx(1637.0 * 12.57e-6 * mu * hd / 1200.0));
}

TEST_CASE("static field from measurement") {
  const auto a = valve();
  CHECK(h_static_from_measurement(0.0, 0.0, 1.5e7, a) == 0.0);
  CHECK(h_static_from_measurement(0.1, 0.0, 1.5e7, a) == doctest::Approx(2181.818).epsilon(1e-6));
  // Inverse of the static coil current.
  const double h = 742.0, b = 0.6, r = 2.3e7;
  const double i = coil_current(h, b, 100 * kMu0, r, 0.0, a);
  CHECK(h_static_from_measurement(i, b * a.core.a_iron, r, a) == doctest::Approx(h).epsilon(1e-12));
}

TEST_CASE("magnetic force") {
  const auto a = valve();
  const double slope = 1.0 / (kMu0 * 12.57e-6);
  CHECK(magnetic_force(0.0, slope, a) == 0.0);
  const double b = 1e-5 / a.core.a_iron;  // phi = 1e-5 Wb
  CHECK(magnetic_force(b, slope, a) == doctest::Approx(-0.5 * 1e-10 * slope).epsilon(1e-12));
  CHECK(magnetic_force(-b, slope, a) == magnetic_force(b, slope, a));
}

TEST_CASE("actuator parameter validation") {
  auto a = valve();
  CHECK_NOTHROW(a.validate());
  a.coil.turns = 0;
  CHECK_THROWS_AS(a.validate(), InvalidArgument);
  a = valve();
  a.coil.resistance = -1;
  CHECK_THROWS_AS(a.validate(), InvalidArgument);
  a = valve();
  a.eddy.k_ec = -1;
  CHECK_THROWS_AS(a.validate(), InvalidArgument);
  a = valve();
  a.core.a_iron = 0;
  CHECK_THROWS_AS(a.validate(), InvalidArgument);
}
