#include "reluctsim/identify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <json.hpp>

#include "reluctsim/constants.hpp"
#include "reluctsim/csv.hpp"
#include "reluctsim/errors.hpp"
#include "reluctsim/waveform.hpp"

namespace reluctsim::identify {

using hysteresis::Direction;
using hysteresis::GpmModel;
using hysteresis::Staircase;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::filesystem::path sidecar(std::filesystem::path p) { return p.replace_extension(".json"); }

// Linear interpolation of the trajectory's (i, phi) at the given times.
void sample(const hybrid::Trajectory& traj, const std::vector<double>& times, double t0,
            std::vector<double>& i, std::vector<double>& phi) {
  const auto& r = traj.records;
  i.resize(times.size());
  phi.resize(times.size());
  std::size_t k = 0;
  for (std::size_t s = 0; s < times.size(); ++s) {
    const double t = times[s] - t0;
    while (k + 1 < r.size() && r[k + 1].t <= t) ++k;
    if (r[k].t == t || k + 1 >= r.size()) {
      i[s] = r[k].i;
      phi[s] = r[k].phi;
      continue;
    }
    const double w = (t - r[k].t) / (r[k + 1].t - r[k].t);
    i[s] = r[k].i + w * (r[k + 1].i - r[k].i);
    phi[s] = r[k].phi + w * (r[k + 1].phi - r[k].phi);
  }
}

bool at_stroke_end(double z, const hybrid::MechParams& m) {
  const double tol = 1e-9 * (m.z_max - m.z_min);
  return std::abs(z - m.z_min) <= tol || std::abs(z - m.z_max) <= tol;
}

// Pinned run of one record; fills the simulated (i, phi) at the sample times.
void simulate_record(const ExperimentRecord& rec, const hybrid::Plant& plant,
                     const hybrid::SimConfig& base, std::size_t demag_n, std::vector<double>& i,
                     std::vector<double>& phi) {
  const auto& g = plant.gpm().params();
  const double z = std::abs(*rec.gap - plant.mech().z_min) <
                           std::abs(*rec.gap - plant.mech().z_max)
                       ? plant.mech().z_min
                       : plant.mech().z_max;
  const auto init = hybrid::rest_state(plant, hysteresis::demag_history(demag_n, g.beta0, g.alpha0),
                                       Direction::Increasing, z);
  std::vector<double> t(rec.t.size());
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = rec.t[k] - rec.t.front();
  const VoltageWaveform wave(t, rec.v);
  hybrid::SimConfig cfg = base;
  cfg.t_end = t.back();
  cfg.pinned = true;
  const auto traj = hybrid::simulate(init, wave, plant, cfg);
  sample(traj, rec.t, rec.t.front(), i, phi);
}

}  // namespace

// ---------------------------------------------------------------------------

double ExperimentRecord::sample_period() const {
  if (t.size() < 2) throw InvalidArgument("record needs at least two samples");
  return (t.back() - t.front()) / static_cast<double>(t.size() - 1);
}

void ExperimentRecord::validate() const {
  if (t.size() < 2) throw InvalidArgument("record needs at least two samples");
  if (i.size() != t.size() || phi.size() != t.size() || (!v.empty() && v.size() != t.size())) {
    throw InvalidArgument("record columns have different lengths");
  }
  for (std::size_t k = 0; k < t.size(); ++k) {
    require_finite(t[k], "record time");
    require_finite(i[k], "record current");
    require_finite(phi[k], "record flux");
    if (!v.empty()) require_finite(v[k], "record voltage");
  }
  const double dt = sample_period();
  if (!(dt > 0.0)) throw InvalidArgument("record times must be strictly increasing");
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (!(t[k] > t[k - 1])) {
      throw InvalidArgument("record times must be strictly increasing (row " +
                            std::to_string(k + 1) + ")");
    }
    if (std::abs(t[k] - t[k - 1] - dt) > 1e-6 * dt) {
      throw InvalidArgument("record sampling is not uniform (row " + std::to_string(k + 1) + ")");
    }
  }
  if (gap) require_finite(*gap, "record gap");
}

ExperimentRecord ExperimentRecord::load(const std::filesystem::path& csv_path) {
  const auto table = csv::read(csv_path, {"t_s", "i_A", "phi_Wb"}, {"v_V"});
  ExperimentRecord r;
  r.t = table.at("t_s");
  r.i = table.at("i_A");
  r.phi = table.at("phi_Wb");
  if (table.has("v_V")) r.v = table.at("v_V");
  const auto meta = sidecar(csv_path);
  if (std::filesystem::exists(meta)) {
    std::ifstream in(meta);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
      if (j.contains("gap_m")) r.gap = j.at("gap_m").get<double>();
      if (j.contains("wave")) r.wave = j.at("wave").get<std::string>();
      if (j.contains("level")) r.level = j.at("level").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(meta.string() + ": " + e.what());
    }
  }
  try {
    r.validate();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(csv_path.string() + ": " + e.what());
  }
  return r;
}

void ExperimentRecord::save(const std::filesystem::path& csv_path) const {
  validate();
  std::ofstream out(csv_path);
  if (!out) throw InvalidArgument("cannot write '" + csv_path.string() + "'");
  out << (has_voltage() ? "t_s,v_V,i_A,phi_Wb\n" : "t_s,i_A,phi_Wb\n");
  for (std::size_t k = 0; k < t.size(); ++k) {
    out << csv::format(t[k]) << ',';
    if (has_voltage()) out << csv::format(v[k]) << ',';
    out << csv::format(i[k]) << ',' << csv::format(phi[k]) << '\n';
  }
  nlohmann::json j;
  if (gap) j["gap_m"] = *gap;
  j["wave"] = wave;
  j["level"] = level;
  std::ofstream meta(sidecar(csv_path));
  meta << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

BhSeries derive_bh(const ExperimentRecord& rec, const magnetics::ActuatorParams& p,
                   const magnetics::ReluctanceTable& table) {
  rec.validate();
  if (!rec.gap) throw InvalidArgument("record has no gap (z) metadata");
  const double r_air = table(*rec.gap).r_air;
  BhSeries s;
  s.h.reserve(rec.t.size());
  s.b.reserve(rec.t.size());
  for (std::size_t k = 0; k < rec.t.size(); ++k) {
    s.h.push_back(magnetics::h_static_from_measurement(rec.i[k], rec.phi[k], r_air, p));
    s.b.push_back(rec.phi[k] / p.core.a_iron);
  }
  return s;
}

std::vector<ReversalPoint> extract_reversal_slopes(const BhSeries& s, int window,
                                                   std::vector<std::string>* warnings) {
  if (window < 1) throw InvalidArgument("slope window must be >= 1");
  if (s.h.size() != s.b.size()) throw InvalidArgument("H and B series differ in length");
  std::vector<ReversalPoint> out;
  const std::size_t n = s.h.size();
  int dir = 0;  // direction of the last non-zero increment
  for (std::size_t k = 1; k < n; ++k) {
    const double d = s.h[k] - s.h[k - 1];
    const int here = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    if (here == 0) continue;
    if (dir != 0 && here != dir) {
      const std::size_t r = k - 1;  // extreme sample
      if (r + static_cast<std::size_t>(window) >= n) {
        if (warnings) {
          warnings->push_back("reversal at sample " + std::to_string(r) +
                              " skipped: fewer than " + std::to_string(window) +
                              " samples follow");
        }
      } else {
        double mh = 0.0, mb = 0.0;
        const double m = window + 1.0;
        for (std::size_t j = r; j <= r + window; ++j) {
          mh += s.h[j] / m;
          mb += s.b[j] / m;
        }
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t j = r; j <= r + window; ++j) {
          sxy += (s.h[j] - mh) * (s.b[j] - mb);
          sxx += (s.h[j] - mh) * (s.h[j] - mh);
        }
        const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
        if (slope > 0.0) {
          out.push_back({s.h[r], slope});
        } else if (warnings) {
          warnings->push_back("reversal at sample " + std::to_string(r) +
                              " skipped: non-positive slope");
        }
      }
    }
    dir = here;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Separable {
  double mu1 = 0.0, mu2 = 0.0, rmse = kInf;
};

// Best (mu1, mu2) for fixed (H1, H2) by linear least squares on mu - mu0.
Separable solve_linear(const std::vector<ReversalPoint>& pts, double h1, double h2) {
  double a11 = 0, a12 = 0, a22 = 0, r1 = 0, r2 = 0;
  for (const auto& p : pts) {
    const double e1 = std::exp(-std::abs(p.h) / h1), e2 = std::exp(-std::abs(p.h) / h2);
    const double y = p.slope - kMu0;
    a11 += e1 * e1;
    a12 += e1 * e2;
    a22 += e2 * e2;
    r1 += e1 * y;
    r2 += e2 * y;
  }
  Separable s;
  const double det = a11 * a22 - a12 * a12;
  if (det > 1e-12 * a11 * a22) {
    s.mu1 = (r1 * a22 - r2 * a12) / det;
    s.mu2 = (a11 * r2 - a12 * r1) / det;
  } else if (a11 > 0.0) {
    s.mu1 = r1 / a11;
  }
  hysteresis::RevParams rev{s.mu1, s.mu2, h1, h2};
  if (!rev.strictly_positive()) return s;
  double sse = 0.0;
  for (const auto& p : pts) {
    const double e = hysteresis::mu_rev(p.h, rev) - p.slope;
    sse += e * e;
  }
  s.rmse = std::sqrt(sse / static_cast<double>(pts.size()));
  return s;
}

}  // namespace

RevFit fit_rev(const std::vector<ReversalPoint>& points, const optimize::Options& opt) {
  std::vector<double> mags;
  for (const auto& p : points) {
    require_finite(p.h, "reversal field");
    require_finite(p.slope, "reversal slope");
    if (!(p.slope > 0.0)) throw InvalidArgument("reversal slopes must be positive");
    mags.push_back(std::abs(p.h));
  }
  std::sort(mags.begin(), mags.end());
  int distinct = mags.empty() ? 0 : 1;
  for (std::size_t k = 1; k < mags.size(); ++k) {
    if (mags[k] - mags[k - 1] > 1e-6 * std::max(1.0, mags[k])) ++distinct;
  }
  if (distinct < 4) {
    throw InvalidArgument("fit_rev needs at least 4 reversal points with distinct |H|, got " +
                          std::to_string(distinct));
  }

  // Quarter-decade grid for the seed.
  double seed1 = 100.0, seed2 = 1e4, best = kInf;
  for (int a = 0; a <= 20; ++a) {
    for (int b = a + 1; b <= 20; ++b) {
      const double h1 = std::pow(10.0, 0.5 + 0.25 * a), h2 = std::pow(10.0, 0.5 + 0.25 * b);
      const double r = solve_linear(points, h1, h2).rmse;
      if (r < best) {
        best = r;
        seed1 = h1;
        seed2 = h2;
      }
    }
  }
  if (!std::isfinite(best)) throw NumericalError("fit_rev: no admissible seed on the grid");

  const optimize::Bound hb{0.1, 1e7, true};
  auto f = [&](const std::vector<double>& x) { return solve_linear(points, x[0], x[1]).rmse; };
  const auto res = optimize::minimize(f, {seed1, seed2}, {hb, hb}, opt);
  if (!std::isfinite(res.objective)) throw NumericalError("fit_rev: optimizer failed");

  double h1 = res.x[0], h2 = res.x[1];
  const Separable s = solve_linear(points, h1, h2);
  RevFit out;
  out.rev = {s.mu1, s.mu2, h1, h2};
  if (h1 > h2) out.rev = {s.mu2, s.mu1, h2, h1};
  out.fit = res;
  out.fit.x = {out.rev.mu1, out.rev.mu2, out.rev.h1, out.rev.h2};
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void check_loops(const std::vector<BhSeries>& loops) {
  if (loops.empty()) throw InvalidArgument("no B-H loops to fit");
  for (const auto& l : loops) {
    if (l.h.empty() || l.h.size() != l.b.size()) {
      throw InvalidArgument("B-H loop is empty or its columns differ in length");
    }
  }
}

// Squared error of one replay from the demagnetized staircase.
double replay_sse(const BhSeries& loop, const Staircase& start) {
  Staircase s = start;
  double sse = 0.0;
  for (std::size_t k = 0; k < loop.h.size(); ++k) {
    const double e = s.advance(loop.h[k]) - loop.b[k];
    sse += e * e;
  }
  return sse;
}

std::size_t total_samples(const std::vector<BhSeries>& loops) {
  std::size_t n = 0;
  for (const auto& l : loops) n += l.h.size();
  return n;
}

}  // namespace

double gpm_objective_serial(const std::vector<BhSeries>& loops, const hysteresis::GpmParams& p,
                            std::size_t demag_n) {
  check_loops(loops);
  const GpmModel model(p);
  const Staircase start(model, hysteresis::demag_history(demag_n, p.beta0, p.alpha0),
                        Direction::Increasing);
  double sse = 0.0;
  for (const auto& l : loops) sse += replay_sse(l, start);
  return std::sqrt(sse / static_cast<double>(total_samples(loops)));
}

double gpm_objective(const std::vector<BhSeries>& loops, const hysteresis::GpmParams& p,
                     std::size_t demag_n) {
  check_loops(loops);
  const GpmModel model(p);
  const Staircase start(model, hysteresis::demag_history(demag_n, p.beta0, p.alpha0),
                        Direction::Increasing);
  const long n = static_cast<long>(loops.size());
  std::vector<double> sse(loops.size(), 0.0);
  bool failed = false;
#pragma omp parallel for schedule(dynamic, 1)
  for (long k = 0; k < n; ++k) {
    try {
      sse[k] = replay_sse(loops[k], start);
    } catch (const std::exception&) {
#pragma omp atomic write
      failed = true;
    }
  }
  if (failed) throw NumericalError("GPM replay failed");
  double total = 0.0;
  for (double s : sse) total += s;  // fixed order, same rounding as the serial path
  return std::sqrt(total / static_cast<double>(total_samples(loops)));
}

BhSeries decimate(const BhSeries& s, int stride) {
  if (stride < 1) throw InvalidArgument("decimation stride must be >= 1");
  if (s.h.size() != s.b.size()) throw InvalidArgument("H and B series differ in length");
  BhSeries out;
  const std::size_t n = s.h.size();
  int dir = 0;
  for (std::size_t k = 0; k < n; ++k) {
    bool keep = k % static_cast<std::size_t>(stride) == 0 || k + 1 == n;
    if (k + 1 < n) {
      const double d = s.h[k + 1] - s.h[k];
      const int next = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
      if (next != 0) {
        if (dir != 0 && next != dir) keep = true;
        dir = next;
      }
    }
    if (keep) {
      out.h.push_back(s.h[k]);
      out.b.push_back(s.b[k]);
    }
  }
  return out;
}

GpmFit fit_gpm(const std::vector<BhSeries>& full, const hysteresis::RevParams& rev,
               const GpmFitOptions& opt) {
  check_loops(full);
  std::vector<BhSeries> loops;
  for (const auto& l : full) loops.push_back(decimate(l, opt.stride));
  rev.validate();
  const double range = opt.demag_range;
  if (!(range > 0.0) || opt.demag_n < 1) throw InvalidArgument("invalid demagnetization settings");

  // Seeds from the widest loop: coercive field from B zero crossings on the
  // descending branch, saturation from the irreversible part at the peak.
  std::size_t widest = 0;
  double peak = 0.0;
  for (std::size_t k = 0; k < loops.size(); ++k) {
    for (double h : loops[k].h) {
      if (std::abs(h) > peak) {
        peak = std::abs(h);
        widest = k;
      }
    }
  }
  const auto& w = loops[widest];
  double hc_sum = 0.0, b_irr = 0.0;
  int hc_n = 0;
  for (std::size_t k = 0; k < w.h.size(); ++k) {
    b_irr = std::max(b_irr, std::abs(w.b[k] - hysteresis::b_rev(w.h[k], rev)));
    if (k > 0 && w.h[k] < w.h[k - 1] && w.b[k - 1] > 0.0 && w.b[k] <= 0.0) {
      const double f = w.b[k - 1] / (w.b[k - 1] - w.b[k]);
      hc_sum += std::abs(w.h[k - 1] + f * (w.h[k] - w.h[k - 1]));
      ++hc_n;
    }
  }
  const double hc = hc_n > 0 ? hc_sum / hc_n : 0.05 * peak;
  const double lo_scale = 1e-4 * range;
  const std::vector<double> x0{std::clamp(hc, 0.0, range), std::clamp(0.5 * hc, lo_scale, range),
                               std::clamp(0.5 * hc, lo_scale, range),
                               std::clamp(b_irr, 1e-6, 10.0)};
  const std::vector<optimize::Bound> bounds{
      {0.0, range, false}, {lo_scale, range, true}, {lo_scale, range, true}, {1e-6, 10.0, true}};

  auto params = [&](const std::vector<double>& x) {
    hysteresis::GpmParams p;
    p.rev = rev;
    p.dist = hysteresis::PreisachDistribution::from(x[0], x[1], x[2]);
    p.b_irr_sat = x[3];
    p.alpha0 = range;
    p.beta0 = -range;
    return p;
  };
  auto f = [&](const std::vector<double>& x) {
    try {
      return opt.parallel ? gpm_objective(loops, params(x), opt.demag_n)
                          : gpm_objective_serial(loops, params(x), opt.demag_n);
    } catch (const std::exception&) {
      return kInf;
    }
  };
  GpmFit out;
  out.fit = optimize::minimize(f, x0, bounds, opt.opt);
  if (!std::isfinite(out.fit.objective)) throw NumericalError("fit_gpm: optimizer failed");
  const auto& x = out.fit.x;
  out.dist = hysteresis::PreisachDistribution::from(x[0], x[1], x[2]);
  out.b_irr_sat = x[3];
  double b_max = 0.0;
  for (const auto& l : loops) {
    for (double b : l.b) b_max = std::max(b_max, std::abs(b));
  }
  out.identifiable = out.b_irr_sat > 1e-3 * b_max;
  return out;
}

// ---------------------------------------------------------------------------

double kec_objective(const std::vector<ExperimentRecord>& records, const hybrid::PlantParams& base,
                     const magnetics::ReluctanceTable& table, double k_ec,
                     const KecFitOptions& opt) {
  if (records.empty()) throw InvalidArgument("no records for the eddy-current fit");
  for (const auto& r : records) {
    r.validate();
    if (!r.has_voltage()) throw InvalidArgument("eddy-current records need a voltage column");
    if (!r.gap || !at_stroke_end(*r.gap, base.mech)) {
      throw InvalidArgument("eddy-current records need a gap at a stroke end");
    }
  }
  if (!(k_ec >= 0.0) || !std::isfinite(k_ec)) return kInf;
  hybrid::PlantParams pp = base;
  pp.actuator.eddy.k_ec = k_ec;
  std::optional<hybrid::Plant> plant;
  try {
    plant.emplace(pp, table);
  } catch (const std::exception&) {
    return kInf;
  }

  const long n = static_cast<long>(records.size());
  std::vector<double> ei(records.size()), ni(records.size()), ep(records.size()),
      np(records.size());
  bool failed = false;
#pragma omp parallel for schedule(dynamic, 1) if (opt.parallel)
  for (long k = 0; k < n; ++k) {
    const auto& rec = records[k];
    std::vector<double> i, phi;
    try {
      simulate_record(rec, *plant, opt.sim, opt.demag_n, i, phi);
    } catch (const std::exception&) {
#pragma omp atomic write
      failed = true;
      continue;
    }
    for (std::size_t s = 0; s < i.size(); ++s) {
      ei[k] += (rec.i[s] - i[s]) * (rec.i[s] - i[s]);
      ni[k] += rec.i[s] * rec.i[s];
      ep[k] += (rec.phi[s] - phi[s]) * (rec.phi[s] - phi[s]);
      np[k] += rec.phi[s] * rec.phi[s];
    }
  }
  if (failed) return kInf;
  double a = 0, b = 0, c = 0, d = 0;
  for (std::size_t k = 0; k < records.size(); ++k) {
    a += ei[k];
    b += ni[k];
    c += ep[k];
    d += np[k];
  }
  if (!(b > 0.0) || !(d > 0.0)) throw InvalidArgument("records carry no current or no flux");
  return std::sqrt(a / b + c / d);
}

KecFit fit_kec(const std::vector<ExperimentRecord>& records, const hybrid::PlantParams& base,
               const magnetics::ReluctanceTable& table, const KecFitOptions& opt) {
  const auto& coil = base.actuator.coil;
  const double seed = static_cast<double>(coil.turns) * coil.turns / coil.resistance;
  KecFit out;
  auto f = [&](const std::vector<double>& x) {
    const double v = kec_objective(records, base, table, x[0], opt);
    if (!std::isfinite(v)) ++out.rejected;
    return v;
  };
  // Validation errors in the records surface here rather than as rejections.
  if (!std::isfinite(kec_objective(records, base, table, seed, opt))) {
    throw NumericalError("fit_kec: simulation fails at the seed k_ec = " + csv::format(seed));
  }
  out.fit = optimize::minimize(f, {std::min(seed, opt.k_max)}, {{0.0, opt.k_max, false}}, opt.opt);
  if (!std::isfinite(out.fit.objective)) throw NumericalError("fit_kec: all candidates failed");
  out.k_ec = out.fit.x[0];
  return out;
}

// ---------------------------------------------------------------------------

Signal degauss_waveform(double amplitude, double decay, int cycles, int samples_per_cycle,
                        double frequency) {
  if (!(amplitude > 0.0) || !(decay > 0.0 && decay < 1.0) || cycles < 0 ||
      samples_per_cycle < 4 || !(frequency > 0.0)) {
    throw InvalidArgument(
        "degauss needs amplitude > 0, 0 < decay < 1, cycles >= 0, samples_per_cycle >= 4, "
        "frequency > 0");
  }
  Signal s;
  if (cycles == 0) return s;
  if (std::pow(decay, cycles) >= 1e-3) {
    throw InvalidArgument("degauss: decay^cycles must fall below 1e-3");
  }
  const long n = static_cast<long>(cycles) * samples_per_cycle;
  for (long k = 0; k < n; ++k) {
    const double c = static_cast<double>(k) / samples_per_cycle;
    s.t.push_back(c / frequency);
    s.y.push_back(amplitude * std::pow(decay, c) * std::sin(2.0 * std::numbers::pi * c));
  }
  s.t.push_back(static_cast<double>(cycles) / frequency);
  s.y.push_back(0.0);
  return s;
}

// ---------------------------------------------------------------------------

ExperimentRecord synthetic_loop(const hybrid::Plant& plant, double level, double z, int periods,
                                int samples_per_period, double minor, double frequency,
                                std::size_t demag_n) {
  if (periods < 1 || samples_per_period < 8 || !(frequency > 0.0)) {
    throw InvalidArgument("synthetic loop needs periods >= 1, samples_per_period >= 8");
  }
  const auto& g = plant.gpm().params();
  const auto& a = plant.actuator();
  Staircase s(plant.gpm(), hysteresis::demag_history(demag_n, g.beta0, g.alpha0),
              Direction::Increasing);
  const double r_air = plant.table()(z).r_air;
  ExperimentRecord rec;
  rec.gap = z;
  rec.wave = "sine";
  rec.level = level;
  const long n = static_cast<long>(periods) * samples_per_period;
  for (long k = 0; k <= n; ++k) {
    const double c = static_cast<double>(k) / samples_per_period;
    const double w = 2.0 * std::numbers::pi * c;
    const double h = level * (std::sin(w) + minor * std::sin(8.0 * w));
    const double phi = a.core.a_iron * s.advance(h);
    rec.t.push_back(c / frequency);
    rec.phi.push_back(phi);
    rec.i.push_back((h * a.core.l_iron + phi * r_air) / a.coil.turns);
  }
  return rec;
}

ExperimentRecord synthetic_square(const hybrid::Plant& plant, double level, double period,
                                  int periods, double sample_dt, double sim_dt,
                                  std::size_t demag_n) {
  const double half = 0.5 * period / sample_dt;
  const long per_half = std::lround(half);
  if (periods < 1 || per_half < 1 || std::abs(half - per_half) > 1e-9 * half) {
    throw InvalidArgument("half the square-wave period must be a multiple of the sample period");
  }
  // Edges on the sample grid, computed the same way as the sample times.
  std::vector<double> te, ve;
  for (long e = 0; e < 2L * periods; ++e) {
    te.push_back(static_cast<double>(e * per_half) * sample_dt);
    ve.push_back(e % 2 == 0 ? level : -level);
  }
  const VoltageWaveform edges(te, ve);
  const long n = 2L * periods * per_half;
  ExperimentRecord rec;
  rec.gap = plant.mech().z_min;
  rec.wave = "bipolar_square";
  rec.level = level;
  for (long k = 0; k <= n; ++k) rec.t.push_back(static_cast<double>(k) * sample_dt);
  for (double t : rec.t) rec.v.push_back(edges(t));
  // Simulated through the sampled voltage, exactly as the fit replays it.
  hybrid::SimConfig cfg;
  cfg.dt = sim_dt;
  simulate_record(rec, plant, cfg, demag_n, rec.i, rec.phi);
  return rec;
}

void add_noise(std::vector<double>& x, double rel, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double& v : x) v *= 1.0 + rel * n(rng);
}

}  // namespace reluctsim::identify
