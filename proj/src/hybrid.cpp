#include "reluctsim/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "reluctsim/errors.hpp"

namespace reluctsim::hybrid {

using hysteresis::Direction;
using hysteresis::Staircase;

void MechParams::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) throw InvalidArgument("plunger mass must be positive");
  if (!(k_s >= 0.0) || !std::isfinite(k_s)) throw InvalidArgument("spring stiffness must be non-negative");
  require_finite(z_s, "spring equilibrium z_s");
  if (!(c >= 0.0) || !std::isfinite(c)) throw InvalidArgument("damping must be non-negative");
  require_finite(z_min, "z_min");
  require_finite(z_max, "z_max");
  if (!(z_min < z_max)) throw InvalidArgument("mechanical stops require z_min < z_max");
}

Plant::Plant(PlantParams params, magnetics::ReluctanceTable table, quadrature::Tolerance tol)
    : params_(std::move(params)), gpm_(params_.gpm, tol), table_(std::move(table)) {
  params_.actuator.validate();
  params_.mech.validate();
  const double span = table_.margin() * 1e-6;
  if (table_.z_min() > params_.mech.z_min + span || table_.z_max() < params_.mech.z_max - span) {
    std::ostringstream msg;
    msg << "reluctance table [" << table_.z_min() << ", " << table_.z_max()
        << "] m does not span the stroke [" << params_.mech.z_min << ", " << params_.mech.z_max
        << "] m";
    throw InvalidArgument(msg.str());
  }
}

Direction direction(Mode q) { return index(q) <= 3 ? Direction::Increasing : Direction::Decreasing; }

Position position(Mode q) {
  switch ((index(q) - 1) % 3) {
    case 0: return Position::AtMax;
    case 1: return Position::Moving;
    default: return Position::AtMin;
  }
}

Mode make_mode(Position p, Direction d) {
  const int base = d == Direction::Increasing ? 0 : 3;
  const int off = p == Position::AtMax ? 1 : p == Position::Moving ? 2 : 3;
  return static_cast<Mode>(base + off);
}

Mode mode_from_index(int q) {
  if (q < 1 || q > 6) throw InvalidArgument("mode index must be in 1..6");
  return static_cast<Mode>(q);
}

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Impact: return "impact";
    case EventKind::WipeOut: return "wipe_out";
    case EventKind::Direction: return "direction";
    case EventKind::MotionStart: return "motion_start";
  }
  return "?";
}

void HybridState::validate(const Plant& plant) const {
  const auto& m = plant.mech();
  require_finite(h, "H");
  require_finite(z, "z");
  require_finite(vz, "v_z");
  hist.validate(plant.gpm().params().alpha0, plant.gpm().params().beta0);
  if (!hist.consistent_with(direction(q))) {
    throw InvalidArgument("extrema history cardinality does not match the mode's field direction");
  }
  switch (position(q)) {
    case Position::AtMax:
      if (z != m.z_max || vz != 0.0) throw InvalidArgument("modes 1/4 require z = z_max, v_z = 0");
      break;
    case Position::AtMin:
      if (z != m.z_min || vz != 0.0) throw InvalidArgument("modes 3/6 require z = z_min, v_z = 0");
      break;
    case Position::Moving:
      if (z < m.z_min || z > m.z_max) throw InvalidArgument("plunger outside [z_min, z_max]");
      break;
  }
}

double net_force(double b, double dr_dz, double z, double vz, const Plant& plant) {
  const auto& m = plant.mech();
  return magnetics::magnetic_force(b, dr_dz, plant.actuator()) - m.k_s * (z - m.z_s) - m.c * vz;
}

namespace {

// Field-independent half of an evaluation: the hysteresis and table lookups.
Evaluation core(Mode q, double h, double z, double vz, const Staircase& stair, const Plant& plant) {
  Evaluation e;
  e.b = stair.b(h);
  e.mu = stair.mu(h);
  const auto rs = plant.table()(z);
  e.r_air = rs.r_air;
  e.dr_dz = rs.dr_dz;
  e.force = net_force(e.b, e.dr_dz, z, vz, plant);
  if (position(q) == Position::Moving) {
    e.z_dot = vz;
    e.vz_dot = e.force / plant.mech().mass;
  }
  return e;
}

void set_rates(Evaluation& e, double h, double v, const Plant& plant) {
  e.drive = magnetics::h_drive(h, e.b, e.r_air, v, plant.actuator());
  e.h_dot = magnetics::h_field_derivative(h, e.b, e.mu, e.r_air, v, plant.actuator());
}

HybridState with_history(const HybridState& s, const Staircase& stair) {
  HybridState out = s;
  out.hist = stair.history();
  return out;
}

}  // namespace

double net_force(const HybridState& s, const Plant& plant) {
  const Staircase stair(plant.gpm(), s.hist, direction(s.q));
  return net_force(stair.b(s.h), plant.table()(s.z).dr_dz, s.z, s.vz, plant);
}

Evaluation evaluate(Mode q, double h, double z, double vz, const Staircase& stair, double v,
                    const Plant& plant) {
  Evaluation e = core(q, h, z, vz, stair, plant);
  set_rates(e, h, v, plant);
  return e;
}

Evaluation flow(const HybridState& s, double v, const Plant& plant) {
  const Staircase stair(plant.gpm(), s.hist, direction(s.q));
  return evaluate(s.q, s.h, s.z, s.vz, stair, v, plant);
}

namespace {

struct GuardSet {
  bool impact = false;
  bool wipe = false;
  bool direction = false;
  bool motion = false;
  Position impact_at = Position::AtMax;

  bool any() const { return impact || wipe || direction || motion; }
};

GuardSet check(Mode q, double h, double z, const Evaluation& e, const Staircase& stair,
               const Plant& plant, double deadband) {
  GuardSet g;
  const auto& m = plant.mech();
  const Direction dir = direction(q);
  const Position pos = position(q);
  if (pos == Position::Moving) {
    if (z <= m.z_min) {
      g.impact = true;
      g.impact_at = Position::AtMin;
    } else if (z >= m.z_max) {
      g.impact = true;
      g.impact_at = Position::AtMax;
    }
  }
  const double thr = stair.wipe_threshold();
  if (!std::isnan(thr)) {
    g.wipe = dir == Direction::Increasing ? h >= thr : h <= thr;
  }
  g.direction = dir == Direction::Increasing ? e.drive < -deadband : e.drive > deadband;
  if (pos == Position::AtMax) g.motion = e.force < 0.0;
  if (pos == Position::AtMin) g.motion = e.force > 0.0;
  return g;
}

// Highest-priority transition of a guard set.
Transition select(Mode q, const GuardSet& g) {
  const Direction dir = direction(q);
  if (g.impact) return {EventKind::Impact, make_mode(g.impact_at, dir)};
  if (g.wipe) return {EventKind::WipeOut, q};
  if (g.direction) return {EventKind::Direction, make_mode(position(q), hysteresis::opposite(dir))};
  return {EventKind::MotionStart, make_mode(Position::Moving, dir)};
}

std::vector<Transition> all(Mode q, const GuardSet& g) {
  std::vector<Transition> out;
  const Direction dir = direction(q);
  if (g.impact) out.push_back({EventKind::Impact, make_mode(g.impact_at, dir)});
  if (g.wipe) out.push_back({EventKind::WipeOut, q});
  if (g.direction) {
    out.push_back({EventKind::Direction, make_mode(position(q), hysteresis::opposite(dir))});
  }
  if (g.motion) out.push_back({EventKind::MotionStart, make_mode(Position::Moving, dir)});
  return out;
}

void apply_reset(Mode& q, double h, double& z, double& vz, Staircase& stair,
                 const Transition& tr, const Plant& plant) {
  switch (tr.kind) {
    case EventKind::Impact:
      z = position(tr.target) == Position::AtMin ? plant.mech().z_min : plant.mech().z_max;
      vz = 0.0;
      break;
    case EventKind::WipeOut:
      stair.wipe(h);
      break;
    case EventKind::Direction:
      stair.reverse(h);
      break;
    case EventKind::MotionStart:
      break;
  }
  q = tr.target;
}

double drive_scale(double h, const Evaluation& e, double v, const Plant& plant) {
  const auto& a = plant.actuator();
  return std::abs(a.coil.turns / a.coil.resistance * v) + std::abs(a.core.a_iron * e.b * e.r_air) +
         std::abs(h * a.core.l_iron) + 1e-30;
}

}  // namespace

std::vector<Transition> guards(const HybridState& s, double v, const Plant& plant,
                               double deadband) {
  const Staircase stair(plant.gpm(), s.hist, direction(s.q));
  const Evaluation e = evaluate(s.q, s.h, s.z, s.vz, stair, v, plant);
  return all(s.q, check(s.q, s.h, s.z, e, stair, plant, deadband));
}

HybridState jump(const HybridState& s, const Transition& tr, double v, const Plant& plant,
                 double deadband) {
  const auto enabled = guards(s, v, plant, deadband);
  const bool ok = std::any_of(enabled.begin(), enabled.end(), [&](const Transition& t) {
    return t.kind == tr.kind && t.target == tr.target;
  });
  if (!ok) {
    throw InvalidArgument(std::string("transition '") + to_string(tr.kind) + "' to mode " +
                          std::to_string(index(tr.target)) + " is not enabled");
  }
  HybridState out = s;
  Staircase stair(plant.gpm(), s.hist, direction(s.q));
  apply_reset(out.q, out.h, out.z, out.vz, stair, tr, plant);
  return with_history(out, stair);
}

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("time step dt must be positive");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InvalidArgument("t_end must be non-negative");
  if (!(t_tol > 0.0) || !(t_tol < dt)) throw InvalidArgument("event tolerance must satisfy 0 < t_tol < dt");
  if (record_stride < 1) throw InvalidArgument("record stride must be >= 1");
  if (!(deadband_rel >= 0.0)) throw InvalidArgument("deadband must be non-negative");
  if (max_events_per_ms < 1) throw InvalidArgument("max_events_per_ms must be >= 1");
}

// ---------------------------------------------------------------------------

HybridState rest_state(const Plant& plant, hysteresis::ExtremaHistory hist, Direction dir,
                       double z, double h_start) {
  const auto& a = plant.actuator();
  const double r_air = plant.table()(z).r_air;
  Staircase base(plant.gpm(), std::move(hist), dir);
  // Residual of the v = 0 balance with the memory the monotone move to h leaves behind.
  auto residual = [&](double h) {
    Staircase s = base;
    s.wipe(h);
    return a.core.a_iron * s.b(h) * r_air + h * a.core.l_iron;
  };
  const double g0 = residual(h_start);
  const double sign = dir == Direction::Increasing ? 1.0 : -1.0;
  if (g0 * sign > 0.0) {
    throw InvalidArgument("rest state: field would have to move against the memory's direction");
  }
  double lo = h_start, hi = h_start;
  double step = 1.0;
  while (residual(hi) * sign < 0.0) {
    lo = hi;
    hi = h_start + sign * step;
    step *= 2.0;
    if (step > 1e9) throw NumericalError("rest state: no equilibrium found");
  }
  for (int k = 0; k < 200 && std::abs(hi - lo) > 1e-13 * (1.0 + std::abs(hi)); ++k) {
    const double mid = 0.5 * (lo + hi);
    (residual(mid) * sign < 0.0 ? lo : hi) = mid;
  }
  Staircase s = base;
  s.wipe(lo);
  HybridState out;
  out.h = lo;
  out.z = z;
  out.vz = 0.0;
  out.hist = s.history();
  const auto& m = plant.mech();
  const Position pos = z >= m.z_max ? Position::AtMax : z <= m.z_min ? Position::AtMin : Position::Moving;
  out.q = make_mode(pos, dir);
  return out;
}

HybridState demagnetized_rest(const Plant& plant, std::size_t n, double range) {
  return rest_state(plant, hysteresis::demag_history(n, -range, range), Direction::Increasing,
                    plant.mech().z_max);
}

HybridState zero_field(const Plant& plant, std::size_t n, double range) {
  HybridState s;
  s.q = Mode::MaxUp;
  s.z = plant.mech().z_max;
  s.hist = hysteresis::demag_history(n, -range, range);
  return s;
}

// ---------------------------------------------------------------------------

namespace {

struct Point {
  double h, z, vz;
};

class Integrator {
 public:
  Integrator(const Plant& plant, const VoltageWaveform& wave, Counters& counters)
      : plant_(plant), wave_(wave), n_(counters) {}

  Evaluation eval(Mode q, const Point& x, const Staircase& s, double v) {
    ++n_.gpm_b_calls;
    ++n_.mu_gpm_calls;
    const auto& p = plant_.gpm().params();
    if (x.h > p.alpha0 || x.h < p.beta0) ++n_.outside_bounds;
    return evaluate(q, x.h, x.z, x.vz, s, v, plant_);
  }

  // One RK4 step of size tau from x, where k1 is already known. Returns the
  // end point; `end` receives the evaluation there.
  Point rk4(Mode q, const Point& x, const Evaluation& k1, const Staircase& s, double t0,
            double tau, std::size_t seg, Evaluation& end) {
    auto shift = [](const Point& p, const Evaluation& k, double w) {
      return Point{p.h + w * k.h_dot, p.z + w * k.z_dot, p.vz + w * k.vz_dot};
    };
    const Evaluation k2 = eval(q, shift(x, k1, 0.5 * tau), s, wave_.value(t0 + 0.5 * tau, seg));
    const Evaluation k3 = eval(q, shift(x, k2, 0.5 * tau), s, wave_.value(t0 + 0.5 * tau, seg));
    const Evaluation k4 = eval(q, shift(x, k3, tau), s, wave_.value(t0 + tau, seg));
    Point y;
    y.h = x.h + tau / 6.0 * (k1.h_dot + 2.0 * k2.h_dot + 2.0 * k3.h_dot + k4.h_dot);
    y.z = x.z + tau / 6.0 * (k1.z_dot + 2.0 * k2.z_dot + 2.0 * k3.z_dot + k4.z_dot);
    y.vz = x.vz + tau / 6.0 * (k1.vz_dot + 2.0 * k2.vz_dot + 2.0 * k3.vz_dot + k4.vz_dot);
    end = eval(q, y, s, wave_.value(t0 + tau, seg));
    return y;
  }

 private:
  const Plant& plant_;
  const VoltageWaveform& wave_;
  Counters& n_;
};

Record make_record(double t, Mode q, const Point& x, const Evaluation& e, double v,
                   const Plant& plant) {
  const auto& a = plant.actuator();
  Evaluation r = e;
  set_rates(r, x.h, v, plant);
  Record rec;
  rec.t = t;
  rec.q = q;
  rec.h = x.h;
  rec.z = x.z;
  rec.vz = x.vz;
  rec.phi = a.core.a_iron * r.b;
  const double phi_dot = a.core.a_iron * r.mu * r.h_dot;
  rec.i = magnetics::coil_current(x.h, r.b, r.mu, r.r_air, r.h_dot, a);
  rec.i_ec = magnetics::eddy_current(phi_dot, a.eddy);
  rec.force = r.force;
  return rec;
}

bool finite(const Point& x) {
  return std::isfinite(x.h) && std::isfinite(x.z) && std::isfinite(x.vz);
}

}  // namespace

Trajectory simulate(const HybridState& initial, const VoltageWaveform& wave, const Plant& plant,
                    const SimConfig& cfg) {
  cfg.validate();
  initial.validate(plant);
  if (cfg.pinned && position(initial.q) == Position::Moving) {
    throw InvalidArgument("a pinned run must start at a stroke end");
  }
  Trajectory traj;
  Counters& n = traj.counters;
  Integrator rk(plant, wave, n);

  Mode q = initial.q;
  Point x{initial.h, initial.z, initial.vz};
  Staircase stair(plant.gpm(), initial.hist, direction(q));
  double t = 0.0;
  std::size_t seg = wave.segment(t);
  Evaluation here = rk.eval(q, x, stair, wave.value(t, seg));

  auto finish = [&]() {
    traj.final_state.q = q;
    traj.final_state.h = x.h;
    traj.final_state.z = x.z;
    traj.final_state.vz = x.vz;
    traj.final_state.hist = stair.history();
  };
  auto fail = [&](const std::string& why) {
    finish();
    std::ostringstream msg;
    msg << "simulation failed at t = " << t << " s (mode " << index(q) << "): " << why;
    throw SimulationError(msg.str(), traj);
  };
  auto record = [&](bool force) {
    if (!force && n.steps % cfg.record_stride != 0) return;
    const Record rec = make_record(t, q, x, here, wave(t), plant);
    if (!traj.records.empty() && traj.records.back().t == t) {
      traj.records.back() = rec;
    } else {
      traj.records.push_back(rec);
    }
  };

  std::vector<double> recent;  // event times in the trailing millisecond
  auto fire = [&](const Transition& tr) {
    const Mode from = q;
    apply_reset(q, x.h, x.z, x.vz, stair, tr, plant);
    traj.events.push_back({t, tr.kind, from, q, x.h, x.z, x.vz});
    recent.push_back(t);
    while (!recent.empty() && recent.front() < t - 1e-3) recent.erase(recent.begin());
    if (static_cast<int>(recent.size()) > cfg.max_events_per_ms) {
      fail("more than " + std::to_string(cfg.max_events_per_ms) + " events within 1 ms (Zeno)");
    }
    here = rk.eval(q, x, stair, wave.value(t, seg));
  };

  record(true);
  try {
    while (t < cfg.t_end) {
      seg = wave.segment(t);
      const double v0 = wave.value(t, seg);
      set_rates(here, x.h, v0, plant);
      const double band = cfg.deadband_rel * drive_scale(x.h, here, v0, plant);

      // Guards already enabled at the step start (voltage edges, resets).
      {
        GuardSet g = check(q, x.h, x.z, here, stair, plant, band);
        if (cfg.pinned) g.motion = false;
        if (g.direction || g.motion || g.wipe) {
          fire(select(q, g));
          record(true);
          continue;
        }
      }

      const double tau = std::min({cfg.dt, cfg.t_end - t, wave.next_break(seg) - t});
      Evaluation end;
      const Point y = rk.rk4(q, x, here, stair, t, tau, seg, end);
      if (!finite(y)) fail("non-finite state");
      GuardSet g = check(q, y.h, y.z, end, stair, plant, band);
      if (cfg.pinned) g.motion = false;
      if (!g.any()) {
        x = y;
        here = end;
        t = (tau == wave.next_break(seg) - t) ? wave.next_break(seg) : t + tau;
        ++n.steps;
        record(false);
        continue;
      }

      // Localize the earliest guard crossing by bisection on the step size.
      struct Hit {
        double tau;
        Point y;
        Evaluation e;
        Transition tr;
      };
      Hit best{std::numeric_limits<double>::infinity(), y, end, select(q, g)};
      auto localize = [&](auto triggered, const Transition& tr) {
        double lo = 0.0, hi = tau;
        Point y_hi = y;
        Evaluation e_hi = end;
        while (hi - lo > cfg.t_tol) {
          const double mid = 0.5 * (lo + hi);
          Evaluation e_mid;
          const Point y_mid = rk.rk4(q, x, here, stair, t, mid, seg, e_mid);
          ++n.bisection_steps;
          if (triggered(y_mid, e_mid)) {
            hi = mid;
            y_hi = y_mid;
            e_hi = e_mid;
          } else {
            lo = mid;
          }
        }
        if (hi < best.tau) best = {hi, y_hi, e_hi, tr};
      };
      const Direction dir = direction(q);
      if (g.impact) {
        localize([&](const Point& p, const Evaluation& e) {
          return check(q, p.h, p.z, e, stair, plant, band).impact;
        }, all(q, GuardSet{true, false, false, false, g.impact_at}).front());
      }
      if (g.wipe) {
        localize([&](const Point& p, const Evaluation& e) {
          return check(q, p.h, p.z, e, stair, plant, band).wipe;
        }, Transition{EventKind::WipeOut, q});
      }
      if (g.direction) {
        localize([&](const Point& p, const Evaluation& e) {
          return check(q, p.h, p.z, e, stair, plant, band).direction;
        }, Transition{EventKind::Direction, make_mode(position(q), hysteresis::opposite(dir))});
      }
      if (g.motion) {
        localize([&](const Point& p, const Evaluation& e) {
          return check(q, p.h, p.z, e, stair, plant, band).motion;
        }, Transition{EventKind::MotionStart, make_mode(Position::Moving, dir)});
      }
      x = best.y;
      here = best.e;
      t += best.tau;
      ++n.steps;
      fire(best.tr);
      record(true);
    }
  } catch (const SimulationError&) {
    throw;
  } catch (const std::exception& e) {
    fail(e.what());
  }
  finish();
  return traj;
}

// ---------------------------------------------------------------------------

Derived trajectory_outputs(const Trajectory& traj, const HybridState& initial,
                           const VoltageWaveform& wave, const Plant& plant) {
  const auto& a = plant.actuator();
  Derived d;
  Staircase stair(plant.gpm(), initial.hist, direction(initial.q));
  std::size_t next_event = 0;
  for (const Record& r : traj.records) {
    while (next_event < traj.events.size() && traj.events[next_event].t <= r.t) {
      const Event& ev = traj.events[next_event++];
      if (ev.kind == EventKind::WipeOut) stair.wipe(ev.h);
      if (ev.kind == EventKind::Direction) stair.reverse(ev.h);
    }
    const double v = wave(r.t);
    const Evaluation e = evaluate(r.q, r.h, r.z, r.vz, stair, v, plant);
    const double phi = a.core.a_iron * e.b;
    const double phi_dot = a.core.a_iron * e.mu * e.h_dot;
    const double i = magnetics::coil_current(r.h, e.b, e.mu, e.r_air, e.h_dot, a);
    const double i_ec = magnetics::eddy_current(phi_dot, a.eddy);
    d.i.push_back(i);
    d.phi.push_back(phi);
    d.i_ec.push_back(i_ec);
    d.force.push_back(e.force);
    const double n_i = a.coil.turns * i;
    const double amp = n_i + i_ec - r.h * a.core.l_iron - phi * e.r_air;
    const double amp_scale = std::max({std::abs(n_i), std::abs(i_ec), std::abs(r.h * a.core.l_iron),
                                       std::abs(phi * e.r_air)});
    d.ampere_residual.push_back(amp_scale > 0.0 ? std::abs(amp) / amp_scale : 0.0);
    const double el = v - a.coil.resistance * i - a.coil.turns * phi_dot;
    const double el_scale = std::max(std::abs(v), std::abs(a.coil.resistance * i));
    d.electrical_residual.push_back(el_scale > 0.0 ? std::abs(el) / el_scale : 0.0);
  }
  return d;
}

}  // namespace reluctsim::hybrid
