#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "oracles/hysteron_grid.hpp"
#include "oracles/triangle_2d.hpp"
#include "reluctsim/constants.hpp"
#include "reluctsim/errors.hpp"
#include "reluctsim/hysteresis.hpp"

using namespace reluctsim;
using namespace reluctsim::hysteresis;

namespace {

// Independent reference for T0 = T(1e4, -1e4) (scipy dblquad).
constexpr double kT0 = 1.5946034607522028;

const GpmModel& model() {
  static const GpmModel m(fx::valve_gpm());
  return m;
}

}  // namespace

TEST_CASE("cauchy pdf and cdf") {
  const CauchyDist d{227.9, 154.9};
  CHECK(cauchy_pdf(227.9, d) == doctest::Approx(1.0 / (std::numbers::pi * 154.9)));
  CHECK(cauchy_pdf(227.9, d) == doctest::Approx(2.055e-3).epsilon(1e-3));
  CHECK(cauchy_pdf(227.9 + 154.9, d) == doctest::Approx(0.5 / (std::numbers::pi * 154.9)));
  CHECK(cauchy_cdf(227.9, d) == doctest::Approx(0.5));
  CHECK(cauchy_cdf(227.9 + 154.9, d) - cauchy_cdf(227.9 - 154.9, d) == doctest::Approx(0.5));
  CHECK(cauchy_cdf(INFINITY, d) == 1.0);
  CHECK(cauchy_cdf(-INFINITY, d) == 0.0);
  CHECK_THROWS_AS(cauchy_pdf(NAN, d), InvalidArgument);
  CHECK_THROWS_AS(cauchy_pdf(0.0, CauchyDist{0.0, 0.0}), InvalidArgument);
}

TEST_CASE("preisach density") {
  const auto dist = fx::valve_gpm().dist;
  CHECK(preisach_density(1000.0, -1000.0, dist) ==
        doctest::Approx(cauchy_pdf(1000.0, dist.coercive) * cauchy_pdf(0.0, dist.interaction)));
  CHECK(preisach_density(0.0, 0.0, dist) ==
        doctest::Approx(cauchy_pdf(0.0, dist.coercive) * cauchy_pdf(0.0, dist.interaction)));
  CHECK_THROWS_AS(preisach_density(-1.0, 1.0, dist), InvalidArgument);
  auto bad = dist;
  bad.interaction.location = 5.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("triangle integral reference values") {
  const auto dist = fx::valve_gpm().dist;
  CHECK(model().t0() == doctest::Approx(kT0).epsilon(1e-9));
  CHECK(triangle_integral(100.0, -100.0, dist) == doctest::Approx(0.0347582).epsilon(1e-6));
  CHECK(triangle_integral(9900.0, -9900.0, dist) == doctest::Approx(1.5943359).epsilon(1e-7));
  CHECK(triangle_integral(300.0, -9800.0, dist) == doctest::Approx(0.7936942).epsilon(1e-7));
  CHECK(triangle_integral(42.0, 42.0, dist) == 0.0);
  CHECK_THROWS_AS(triangle_integral(-1.0, 1.0, dist), InvalidArgument);
}

TEST_CASE("triangle integral against 2-D quadrature") {
  const auto dist = fx::valve_gpm().dist;
  fx::Gen g(11);
  for (int k = 0; k < 15; ++k) {
    double a = g.field(1e4), b = g.field(1e4);
    if (a < b) std::swap(a, b);
    const double ref = oracle::triangle_2d(a, b, dist);
    CHECK(triangle_integral(a, b, dist) == doctest::Approx(ref).epsilon(1e-6));
  }
}

TEST_CASE("triangle integral monotone in both corners") {
  const auto dist = fx::valve_gpm().dist;
  fx::Gen g(12);
  for (int k = 0; k < 200; ++k) {
    const double b = g.field(1e4);
    const double a1 = b + std::abs(g.field(1e4));
    const double a2 = a1 + std::abs(g.field(1e4));
    CHECK(triangle_integral(a1, b, dist) <= triangle_integral(a2, b, dist));
    const double b2 = b - std::abs(g.field(1e4));
    CHECK(triangle_integral(a1, b, dist) <= triangle_integral(a1, b2, dist));
  }
}

TEST_CASE("edge integrals: closed form against quadrature") {
  const auto dist = fx::valve_gpm().dist;
  fx::Gen g(13);
  for (int k = 0; k < 2000; ++k) {
    const double h = g.field(1e4);
    const double lo = h - std::abs(g.field(2e4)) * std::pow(10.0, g.uniform(-6.0, 0.0));
    const double hi = h + std::abs(g.field(2e4)) * std::pow(10.0, g.uniform(-6.0, 0.0));
    const double up = ascending_edge_integral(h, lo, dist);
    const double up_ref = ascending_edge_integral_quadrature(h, lo, dist);
    const double dn = descending_edge_integral(h, hi, dist);
    const double dn_ref = descending_edge_integral_quadrature(h, hi, dist);
    REQUIRE(std::abs(up - up_ref) <= 1e-9 * up_ref + 1e-300);
    REQUIRE(std::abs(dn - dn_ref) <= 1e-9 * dn_ref + 1e-300);
  }
}

TEST_CASE("edge integral is the derivative of T") {
  const auto dist = fx::valve_gpm().dist;
  const double beta = -300.0, alpha = 800.0;
  for (double h : {-250.0, 0.0, 227.9, 600.0}) {
    const double e = 1e-2;
    const double fd = (triangle_integral(h + e, beta, dist) - triangle_integral(h - e, beta, dist)) / (2 * e);
    CHECK(ascending_edge_integral(h, beta, dist) == doctest::Approx(fd).epsilon(1e-6));
    const double fd2 = -(triangle_integral(alpha, h + e, dist) - triangle_integral(alpha, h - e, dist)) / (2 * e);
    CHECK(descending_edge_integral(h, alpha, dist) == doctest::Approx(fd2).epsilon(1e-6));
  }
}

TEST_CASE("reversible part") {
  const auto p = fx::valve_gpm();
  CHECK(mu_rev(0.0, p.rev) == doctest::Approx(kMu0 * (1 + 168.8 + 64.13)));
  CHECK(mu_rev(0.0, p.rev) == doctest::Approx(2.940e-4).epsilon(1e-3));
  CHECK(b_rev(0.0, p.rev) == 0.0);
  const double h1 = 1262.0;
  const double expect = kMu0 * h1 + p.rev.mu1 * h1 * (1 - std::exp(-1.0)) +
                        p.rev.mu2 * 8821.0 * (1 - std::exp(-h1 / 8821.0));
  CHECK(b_rev(h1, p.rev) == doctest::Approx(expect).epsilon(1e-13));
  CHECK(mu_rev(1e7, p.rev) == doctest::Approx(kMu0).epsilon(1e-12));
  fx::Gen g(14);
  for (int k = 0; k < 500; ++k) {
    const double h = g.field(3e4);
    CHECK(b_rev(-h, p.rev) == -b_rev(h, p.rev));
    CHECK(mu_rev(-h, p.rev) == mu_rev(h, p.rev));
    const double e = 1e-2;
    if (std::abs(h) > 1.0) {
      CHECK((b_rev(h + e, p.rev) - b_rev(h - e, p.rev)) / (2 * e) ==
            doctest::Approx(mu_rev(h, p.rev)).epsilon(1e-7));
    }
  }
}

TEST_CASE("reversible positivity check finds the interior minimum") {
  RevParams r{10 * kMu0, -20 * kMu0, 100.0, 1000.0};
  // mu_rev(0) < 0 already
  CHECK_FALSE(r.strictly_positive());
  auto brute = [](const RevParams& q) {
    double lowest = 1.0;
    for (double h = 0; h < 2e4; h += 0.25) lowest = std::min(lowest, mu_rev(h, q));
    return lowest;
  };
  // positive everywhere but the minimum is interior, not at 0
  r = {-0.9 * kMu0, 0.5 * kMu0, 1000.0, 100.0};
  CHECK(r.min_permeability() < mu_rev(0.0, r));
  CHECK(r.min_permeability() == doctest::Approx(brute(r)).epsilon(1e-6));
  CHECK(r.strictly_positive());
  // negative dip away from zero
  r = {-3.0 * kMu0, 3.0 * kMu0, 1000.0, 100.0};
  CHECK(r.min_permeability() == doctest::Approx(brute(r)).epsilon(1e-6));
  CHECK_FALSE(r.strictly_positive());
  CHECK_THROWS_AS(r.validate(), InvalidArgument);
  CHECK(fx::valve_gpm().rev.strictly_positive());
}

TEST_CASE("saturation magnetization") {
  const auto p = fx::valve_gpm();
  const double expect = 168.8 * 1262 + 64.13 * 8821 + 0.8103 / kMu0;
  CHECK(saturation_magnetization(p) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(saturation_magnetization(p) == doctest::Approx(1.4235e6).epsilon(1e-4));
  GpmParams unit = p;
  unit.rev.mu1 = unit.rev.mu2 = 0.0;
  unit.b_irr_sat = kMu0;
  CHECK(saturation_magnetization(unit) == doctest::Approx(1.0));
  GpmParams twice = p;
  twice.b_irr_sat *= 2;
  CHECK(saturation_magnetization(twice) - saturation_magnetization(p) ==
        doctest::Approx(p.b_irr_sat / kMu0));
}

TEST_CASE("cpm output at saturation and errors") {
  const ExtremaHistory empty;
  CHECK(cpm_output(1e4, empty, Direction::Increasing, model()) == doctest::Approx(model().t0()));
  CHECK(cpm_output(-1e4, empty, Direction::Increasing, model()) == doctest::Approx(-model().t0()));
  const ExtremaHistory dec{{500.0}, {}};
  CHECK(cpm_output(-1e4, dec, Direction::Decreasing, model()) == doctest::Approx(-model().t0()));
  const ExtremaHistory some{{3000.0, 800.0}, {-2000.0, -100.0}};
  CHECK(cpm_output(800.0, some, Direction::Increasing, model()) <= model().t0());
  CHECK_THROWS_AS(cpm_output(2e4, empty, Direction::Increasing, model()), InvalidArgument);
  CHECK_THROWS_AS(cpm_output(0.0, dec, Direction::Increasing, model()), InvalidArgument);
  CHECK_THROWS_AS(cpm_output(-500.0, some, Direction::Increasing, model()), InvalidArgument);
  const auto p = fx::valve_gpm();
  CHECK(gpm_b(1e4, empty, Direction::Increasing, model()) ==
        doctest::Approx(b_rev(1e4, p.rev) + p.b_irr_sat).epsilon(1e-12));
  // held at saturation beyond the bounds
  CHECK(gpm_b(3e4, empty, Direction::Increasing, model()) ==
        doctest::Approx(b_rev(3e4, p.rev) + p.b_irr_sat).epsilon(1e-12));
}

TEST_CASE("demag staircase") {
  const auto h = demag_history(100, -1e4, 1e4);
  REQUIRE(h.maxima.size() == 99);
  REQUIRE(h.minima.size() == 99);
  for (int k = 1; k < 100; ++k) {
    CHECK(h.maxima[k - 1] == doctest::Approx(1e4 - 100.0 * k));
    CHECK(h.minima[k - 1] == doctest::Approx(-1e4 + 100.0 * k));
  }
  CHECK(demag_history(1, -1e4, 1e4) == ExtremaHistory{});
  CHECK_THROWS_AS(demag_history(0, -1, 1), InvalidArgument);
  CHECK_THROWS_AS(demag_history(3, 1, 1), InvalidArgument);
  // The staircase ends on a rising leg from -100, so B_irr(0) is not zero
  // (value cross-checked against 2-D quadrature).
  const double b0 = gpm_b(0.0, h, Direction::Increasing, model());
  CHECK(b0 == doctest::Approx(-0.0924752).epsilon(1e-5));
}

TEST_CASE("history update and push") {
  ExtremaHistory h{{500.0}, {-200.0}};
  auto up = history_update(h, 600.0, Direction::Increasing);
  CHECK(up.hist == ExtremaHistory{});
  CHECK(up.events.size() == 1);
  up = history_update(h, 100.0, Direction::Increasing);
  CHECK(up.hist == h);
  CHECK(up.events.empty());

  ExtremaHistory e;
  e = push_extremum(e, 300.0, Direction::Decreasing, 1e4, -1e4, 2e-5);
  CHECK(e.maxima == std::vector<double>{300.0});
  e = push_extremum(e, -100.0, Direction::Increasing, 1e4, -1e4, 2e-5);
  CHECK(e.minima == std::vector<double>{-100.0});
  CHECK_THROWS_AS(push_extremum(e, 400.0, Direction::Decreasing, 1e4, -1e4, 2e-5), InvalidArgument);
  // merge within tolerance cancels the innermost minimum
  const auto m = push_extremum(e, -100.0 + 1e-6, Direction::Decreasing, 1e4, -1e4, 2e-5);
  CHECK(m.maxima == std::vector<double>{300.0});
  CHECK(m.minima.empty());
  const double with = cpm_output(-100.0 + 1e-6, m, Direction::Decreasing, model());
  const double without = cpm_output(-100.0, e, Direction::Increasing, model());
  CHECK(std::abs(with - without) < 1e-8);
  // saturation edge cases
  const auto sat = push_extremum(ExtremaHistory{}, 2e4, Direction::Decreasing, 1e4, -1e4, 2e-5);
  CHECK(sat.maxima == std::vector<double>{1e4});
  const auto neg = push_extremum(ExtremaHistory{{300.0}, {}}, -2e4, Direction::Increasing, 1e4, -1e4, 2e-5);
  CHECK(neg == ExtremaHistory{});
  CHECK_THROWS_AS(history_update(ExtremaHistory{{1.0, 2.0}, {0.0, -1.0}}, 0.0, Direction::Increasing),
                  InvalidArgument);
}

TEST_CASE("staircase fast path equals recomputed output") {
  fx::Gen g(21);
  for (int trial = 0; trial < 20; ++trial) {
    Staircase s(model(), {}, Direction::Increasing);
    const auto rev = g.reversals(20, 1e4);
    double prev = -1e4;
    s.advance(prev);
    for (double target : rev) {
      for (int k = 1; k <= 4; ++k) {
        const double h = prev + (target - prev) * k / 4.0;
        const double b = s.advance(h);
        CHECK(b == doctest::Approx(gpm_b(h, s.history(), s.direction(), model())).epsilon(1e-12));
        CHECK(s.cpm(h) == doctest::Approx(cpm_output(h, s.history(), s.direction(), model()))
                              .epsilon(1e-10).scale(model().t0()));
      }
      prev = target;
    }
  }
}

TEST_CASE("cpm output matches the hysteron grid on random sequences") {
  const auto p = fx::valve_gpm();
  oracle::HysteronGrid grid(p, 200);
  CHECK(grid.total_mass() == doctest::Approx(model().t0()).epsilon(1e-6));
  fx::Gen g(31);
  for (int trial = 0; trial < 3; ++trial) {
    Staircase s(model(), {}, Direction::Increasing);
    grid.saturate_negative();
    double prev = -1e4;
    s.advance(prev);
    double worst = 0.0;
    for (double target : g.reversals(50, 1e4)) {
      for (int k = 1; k <= 3; ++k) {
        const double h = prev + (target - prev) * k / 3.0;
        s.advance(h);
        grid.apply(h);
        worst = std::max(worst, std::abs(s.cpm(h) - grid.output()));
      }
      prev = target;
    }
    CHECK(worst < 0.01 * model().t0());
  }

  // Parallel relay sweep leaves the same states as the serial one.
  oracle::HysteronGrid twin(p, 200);
  grid.saturate_negative();
  for (double h : g.reversals(30, 1e4)) {
    grid.apply(h);
    twin.apply_serial(h);
    CHECK(grid.output() == doctest::Approx(twin.output_serial()).epsilon(1e-12));
  }
}

TEST_CASE("derivative consistency on monotone segments") {
  fx::Gen g(41);
  int checked = 0;
  while (checked < 100) {
    Staircase s(model(), demag_history(100, -1e4, 1e4), Direction::Increasing);
    s.advance(0.0);
    for (double r : g.reversals(g.integer(1, 8), 1e4)) s.advance(r);
    const double lo = s.direction() == Direction::Increasing
                          ? (s.history().minima.empty() ? -1e4 : s.history().minima.back())
                          : -1e4;
    const double hi = s.direction() == Direction::Increasing
                          ? 1e4
                          : (s.history().maxima.empty() ? 1e4 : s.history().maxima.back());
    const double thr = s.wipe_threshold();
    double a = lo, b = hi;
    if (!std::isnan(thr)) {
      if (s.direction() == Direction::Increasing) b = thr; else a = thr;
    }
    if (b - a < 1.0) continue;
    const double h = g.uniform(a + 0.1, b - 0.1);
    const double e = 1e-2;
    const double fd = (s.b(h + e) - s.b(h - e)) / (2 * e);
    CHECK(s.mu(h) == doctest::Approx(fd).epsilon(1e-4));
    CHECK(s.mu_irr(h) >= 0.0);
    CHECK(s.mu(h) >= mu_rev(h, model().params().rev));
    ++checked;
  }
}

TEST_CASE("mu_irr vanishes at a reversal") {
  Staircase s(model(), {}, Direction::Increasing);
  s.advance(-1e4);
  s.advance(450.0);
  s.advance(449.0);  // reversal recorded at 450
  CHECK(s.mu_irr(450.0) == 0.0);
  CHECK(s.mu(450.0) == mu_rev(450.0, model().params().rev));
  CHECK(s.mu_irr(449.0) > 0.0);
}

TEST_CASE("odd symmetry of the loop") {
  fx::Gen g(51);
  const auto rev = g.reversals(12, 1e4);
  Staircase a(model(), {}, Direction::Increasing);
  Staircase b(model(), {{1e4}, {}}, Direction::Decreasing);
  a.advance(-1e4);
  b.advance(1e4);
  for (double r : rev) {
    CHECK(a.advance(r) == doctest::Approx(-b.advance(-r)).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("wiping out restores the major branch") {
  Staircase s(model(), {}, Direction::Increasing);
  s.advance(-1e4);
  for (double r : {3000.0, -2000.0, 1500.0, -800.0, 600.0, -300.0}) s.advance(r);
  CHECK(s.history().maxima.size() == 3);
  s.advance(1e4);
  CHECK(s.history() == ExtremaHistory{});
  for (double h : {-500.0, 0.0, 500.0, 5000.0}) {
    CHECK(cpm_output(h, ExtremaHistory{}, Direction::Increasing, model()) ==
          doctest::Approx(2 * model().triangle(h, -1e4) - model().t0()));
  }
}
