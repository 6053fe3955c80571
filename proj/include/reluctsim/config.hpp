#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "reluctsim/hybrid.hpp"
#include "reluctsim/optimize.hpp"
#include "reluctsim/waveform.hpp"

/// Run configuration: one JSON document with sections coil, core, eddy, mech,
/// gpm, reluctance, sim, demag, optimizer and waveform. SI units throughout.
/// Missing keys keep the valve defaults; unknown keys are errors.
namespace reluctsim::config {

struct ReluctanceSource {
  std::string table;  // CSV path; empty selects the linear fixture
  double r0 = 1e7;        // 1/H, fixture offset
  double a_gap = 12.57e-6;  // m^2, fixture pole area
  int knots = 31;
};

struct WaveformSource {
  std::string csv;  // `t_s,v_V`; empty selects the pulse train
  std::vector<double> levels{18.0, 20.0, 22.0, 24.0, 26.0};  // V
  double period = 0.02;   // s
  double on_time = 0.01;  // s
  double delay = 0.0;     // s
};

struct Config {
  hybrid::PlantParams plant;  // gpm.alpha0 / beta0 follow demag_range
  ReluctanceSource reluctance;
  hybrid::SimConfig sim;
  std::size_t demag_n = 100;
  double demag_range = 1e4;  // A/m
  optimize::Options optimizer;
  WaveformSource waveform;
  std::vector<std::string> identified;  // completed identification stages
  std::filesystem::path base_dir;       // relative paths resolve here (not serialized)

  /// Every module-level invariant; throws InvalidArgument.
  void validate() const;
  bool has_stage(const std::string& s) const;

  magnetics::ReluctanceTable load_table() const;
  VoltageWaveform load_waveform() const;
};

/// Valve coil, mechanics and GPM values, k_ec = 1637 A/V, the linear
/// reluctance fixture over [0, 0.9 mm] and a five-level pulse train.
Config valve_defaults();

/// Parses without validating (self-check reports violations itself).
/// `mu1_rel_mu0` / `mu2_rel_mu0` are accepted in the gpm section and
/// expanded to H/m.
Config parse(const std::string& json_text, const std::string& source = "config");
Config load(const std::filesystem::path& path);

/// Canonical JSON (absolute units, fixed key order).
std::string dump(const Config& c);
void save(const Config& c, const std::filesystem::path& path);

/// FNV-1a 64 of the canonical JSON, as 16 hex digits.
std::string hash(const Config& c);

}  // namespace reluctsim::config
