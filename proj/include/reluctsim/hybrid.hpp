#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reluctsim/hysteresis.hpp"
#include "reluctsim/magnetics.hpp"
#include "reluctsim/waveform.hpp"

/// Six-mode hybrid automaton of the actuator: field flow plus plunger motion,
/// guards, resets and event-localized fixed-step RK4.
namespace reluctsim::hybrid {

struct MechParams {
  double mass = 1.0;   // kg
  double k_s = 0.0;    // N/m
  double z_s = 0.0;    // m, spring equilibrium gap
  double c = 0.0;      // N s/m
  double z_min = 0.0;  // m
  double z_max = 1.0;  // m

  void validate() const;
};

struct PlantParams {
  magnetics::ActuatorParams actuator;
  MechParams mech;
  hysteresis::GpmParams gpm;
};

/// Parameters plus the derived objects a run needs: the GPM with its cached
/// normalization and the reluctance interpolant.
class Plant {
 public:
  Plant(PlantParams params, magnetics::ReluctanceTable table,
        quadrature::Tolerance tol = {});

  const PlantParams& params() const { return params_; }
  const hysteresis::GpmModel& gpm() const { return gpm_; }
  const magnetics::ReluctanceTable& table() const { return table_; }
  const magnetics::ActuatorParams& actuator() const { return params_.actuator; }
  const MechParams& mech() const { return params_.mech; }

 private:
  PlantParams params_;
  hysteresis::GpmModel gpm_;
  magnetics::ReluctanceTable table_;
};

/// 1: z_max, H up   2: moving, H up   3: z_min, H up
/// 4: z_max, H down 5: moving, H down 6: z_min, H down
enum class Mode : int { MaxUp = 1, MoveUp = 2, MinUp = 3, MaxDown = 4, MoveDown = 5, MinDown = 6 };
enum class Position { AtMax, Moving, AtMin };

inline int index(Mode q) { return static_cast<int>(q); }
hysteresis::Direction direction(Mode q);
Position position(Mode q);
Mode make_mode(Position p, hysteresis::Direction d);
Mode mode_from_index(int q);

struct HybridState {
  Mode q = Mode::MaxUp;
  double h = 0.0;   // A/m
  double z = 0.0;   // m
  double vz = 0.0;  // m/s
  hysteresis::ExtremaHistory hist;

  /// Mode/position/history consistency; throws InvalidArgument.
  void validate(const Plant& plant) const;
};

/// Everything a flow evaluation produces: one f_GPM and one mu'_GPM call.
struct Evaluation {
  double b = 0.0;       // T
  double mu = 0.0;      // H/m
  double r_air = 0.0;   // 1/H
  double dr_dz = 0.0;   // 1/(H m)
  double force = 0.0;   // N, net
  double drive = 0.0;   // numerator of dH/dt
  double h_dot = 0.0;   // A/(m s)
  double z_dot = 0.0;   // m/s
  double vz_dot = 0.0;  // m/s^2
};

double net_force(double b, double dr_dz, double z, double vz, const Plant& plant);
double net_force(const HybridState& s, const Plant& plant);

/// Flow at state (h, z, vz) in mode q with the memory frozen in `stair`.
Evaluation evaluate(Mode q, double h, double z, double vz, const hysteresis::Staircase& stair,
                    double v, const Plant& plant);
Evaluation flow(const HybridState& s, double v, const Plant& plant);

enum class EventKind { Impact, WipeOut, Direction, MotionStart };
const char* to_string(EventKind k);

struct Transition {
  EventKind kind;
  Mode target;
};

/// Guards enabled at the state. `deadband` is the dead zone on the sign of
/// dH/dt used by the direction guard.
std::vector<Transition> guards(const HybridState& s, double v, const Plant& plant,
                               double deadband = 0.0);
/// Applies the reset map of an enabled transition; throws if it is not enabled.
HybridState jump(const HybridState& s, const Transition& tr, double v, const Plant& plant,
                 double deadband = 0.0);

struct SimConfig {
  double dt = 1e-6;       // s
  double t_end = 0.1;     // s
  double t_tol = 1e-9;    // s, event localization
  int record_stride = 1;  // regular steps between records (events always recorded)
  // Relative dead zone on the field-rate sign for the direction guard.
  double deadband_rel = 1e-12;
  // Zeno guard: more events than this in one millisecond aborts the run.
  int max_events_per_ms = 1000;
  // Plunger held at its initial stroke end (motion guards disabled), as in
  // the fixed-gap identification experiments.
  bool pinned = false;

  void validate() const;
};

struct Record {
  double t, h, z, vz, i, phi, force, i_ec;
  Mode q;
};

struct Event {
  double t;
  EventKind kind;
  Mode from, to;
  double h, z, vz;
};

struct Counters {
  std::int64_t steps = 0;
  std::int64_t gpm_b_calls = 0;
  std::int64_t mu_gpm_calls = 0;
  std::int64_t bisection_steps = 0;
  std::int64_t outside_bounds = 0;  // evaluations with H outside [beta0, alpha0]
};

struct Trajectory {
  std::vector<Record> records;
  std::vector<Event> events;
  Counters counters;
  HybridState final_state;
};

/// Field at the v = 0 equilibrium for the given memory and gap, reached by
/// moving H monotonically from `h_start` (wipe-outs applied on the way).
HybridState rest_state(const Plant& plant, hysteresis::ExtremaHistory hist,
                       hysteresis::Direction dir, double z, double h_start = 0.0);
/// Demagnetizing staircase (n, +-range) relaxed to rest at z_max, mode 1.
HybridState demagnetized_rest(const Plant& plant, std::size_t n = 100, double range = 1e4);
/// Same memory with H = 0 exactly (not an equilibrium for v = 0).
HybridState zero_field(const Plant& plant, std::size_t n = 100, double range = 1e4);

/// Thrown by simulate on failure; carries the trajectory prefix.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, Trajectory prefix)
      : std::runtime_error(what), prefix_(std::move(prefix)) {}
  const Trajectory& prefix() const { return prefix_; }

 private:
  Trajectory prefix_;
};

Trajectory simulate(const HybridState& initial, const VoltageWaveform& wave, const Plant& plant,
                    const SimConfig& cfg);

/// Recomputes (i, phi, i_ec, F) for every record from (t, q, H, z, vz) and
/// the event log, replaying the memory. Matches the values stored in
/// `records` to quadrature tolerance.
struct Derived {
  std::vector<double> i, phi, i_ec, force;
  std::vector<double> ampere_residual;      // relative, Ampere balance on N i + i_ec
  std::vector<double> electrical_residual;  // relative, v - R i - N phi_dot
};
Derived trajectory_outputs(const Trajectory& traj, const HybridState& initial,
                           const VoltageWaveform& wave, const Plant& plant);

}  // namespace reluctsim::hybrid
