#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "reluctsim/constants.hpp"
#include "reluctsim/hybrid.hpp"
#include "reluctsim/hysteresis.hpp"

namespace fx {

inline reluctsim::hysteresis::GpmParams valve_gpm() {
  using reluctsim::kMu0;
  reluctsim::hysteresis::GpmParams p;
  p.rev = {168.8 * kMu0, 64.13 * kMu0, 1262.0, 8821.0};
  p.dist = reluctsim::hysteresis::PreisachDistribution::from(227.9, 154.9, 138.0);
  p.b_irr_sat = 0.8103;
  p.alpha0 = 1e4;
  p.beta0 = -1e4;
  return p;
}

// Valve coil and mechanics with the synthetic reluctance fixture on [0, 0.9 mm].
inline reluctsim::hybrid::PlantParams valve_params() {
  reluctsim::hybrid::PlantParams p;
  p.actuator = {{49.0, 1200}, {0.055, 12.57e-6}, {1637.0}};
  p.mech = {1.6e-3, 55.0, 0.015, 0.0, 0.0, 0.9e-3};
  p.gpm = valve_gpm();
  return p;
}

inline reluctsim::magnetics::ReluctanceTable valve_table() {
  return reluctsim::magnetics::ReluctanceTable::linear_fixture(0.0, 0.9e-3, 1e7, 12.57e-6);
}

inline const reluctsim::hybrid::Plant& valve_plant() {
  static const reluctsim::hybrid::Plant plant(valve_params(), valve_table());
  return plant;
}

// Small hand-rolled generators for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin() { return integer(0, 1) == 1; }

  // Field value concentrated near the coercive region with occasional wide excursions.
  double field(double limit) {
    if (integer(0, 3) == 0) return uniform(-limit, limit);
    return uniform(-0.15 * limit, 0.15 * limit);
  }

  // Alternating reversal targets: each leg moves in the opposite direction
  // to a fresh point strictly past the previous one.
  std::vector<double> reversals(int count, double limit) {
    std::vector<double> out;
    double current = -limit;
    bool up = true;
    for (int k = 0; k < count; ++k) {
      const double r = std::pow(uniform(0.0, 1.0), 2.0);
      current = up ? current + (limit - current) * r : current - (current + limit) * r;
      out.push_back(current);
      up = !up;
    }
    return out;
  }

  // Piecewise-constant voltage with random levels and dwell times on [0, t_end].
  reluctsim::VoltageWaveform pulses(double t_end, double v_max, double min_dwell, double max_dwell) {
    std::vector<double> t{0.0}, v{uniform(-v_max, v_max)};
    double tc = 0.0;
    while (true) {
      tc += uniform(min_dwell, max_dwell);
      if (tc >= t_end) break;
      t.push_back(tc);
      v.push_back(coin() ? 0.0 : uniform(-v_max, v_max));
    }
    return reluctsim::VoltageWaveform(std::move(t), std::move(v));
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace fx
