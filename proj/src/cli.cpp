#include "reluctsim/cli.hpp"

#include <glob.h>
#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>

#include <CLI11.hpp>
#include <json.hpp>

#include "reluctsim/config.hpp"
#include "reluctsim/csv.hpp"
#include "reluctsim/errors.hpp"
#include "reluctsim/identify.hpp"

namespace reluctsim::cli {

using json = nlohmann::ordered_json;
namespace id = reluctsim::identify;

namespace {

// Input could not be used as given (exit 2) vs a stage run out of order (exit 4).
class OrderingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::string out = "reluctsim";
  std::string data;
  std::string waveform;
  double dt = 0.0;
  long long seed = -1;
  // degauss
  double amplitude = 0.0;
  double decay = 0.9;
  int cycles = 70;
  int samples_per_cycle = 200;
  double frequency = 10.0;
};

config::Config base_config(const Options& o) {
  config::Config c = o.config.empty() ? config::valve_defaults() : config::load(o.config);
  if (o.dt > 0.0) c.sim.dt = o.dt;
  if (o.seed >= 0) c.optimizer.seed = static_cast<std::uint64_t>(o.seed);
  return c;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw InvalidArgument("cannot write '" + path + "'");
  f << text;
}

void write_report(const std::string& prefix, const std::string& command, const std::string& hash,
                  double runtime, const std::vector<std::string>& outputs, const json& summary) {
  json r;
  r["command"] = command;
  r["config_hash"] = hash;
  r["runtime_s"] = runtime;
  r["outputs"] = outputs;
  r["summary"] = summary;
  write_text(prefix + ".report.json", r.dump(2) + "\n");
}

std::vector<std::string> expand(const std::string& pattern) {
  std::vector<std::string> out;
  if (pattern.empty()) return out;
  glob_t g{};
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
    for (std::size_t k = 0; k < g.gl_pathc; ++k) out.emplace_back(g.gl_pathv[k]);
  }
  ::globfree(&g);
  return out;
}

// ---------------------------------------------------------------------------

void write_trajectory(const std::string& path, const hybrid::Trajectory& tr) {
  std::ofstream f(path);
  if (!f) throw InvalidArgument("cannot write '" + path + "'");
  f << "t_s,q,H_A_per_m,z_m,vz_m_per_s,i_A,phi_Wb,F_N,iec_A\n";
  for (const auto& r : tr.records) {
    f << csv::format(r.t) << ',' << hybrid::index(r.q) << ',' << csv::format(r.h) << ','
      << csv::format(r.z) << ',' << csv::format(r.vz) << ',' << csv::format(r.i) << ','
      << csv::format(r.phi) << ',' << csv::format(r.force) << ',' << csv::format(r.i_ec) << '\n';
  }
}

void write_events(const std::string& path, const hybrid::Trajectory& tr) {
  std::ofstream f(path);
  if (!f) throw InvalidArgument("cannot write '" + path + "'");
  for (const auto& e : tr.events) {
    json j;
    j["t"] = e.t;
    j["kind"] = hybrid::to_string(e.kind);
    j["q_from"] = hybrid::index(e.from);
    j["q_to"] = hybrid::index(e.to);
    f << j.dump() << '\n';
  }
}

json trajectory_summary(const hybrid::Trajectory& tr) {
  std::map<std::string, int> kinds;
  for (const auto& e : tr.events) ++kinds[hybrid::to_string(e.kind)];
  int worst = 0;
  for (std::size_t a = 0, b = 0; b < tr.events.size(); ++b) {
    while (tr.events[b].t - tr.events[a].t >= 1e-3) ++a;
    worst = std::max(worst, static_cast<int>(b - a + 1));
  }
  json s;
  s["records"] = tr.records.size();
  s["events"] = tr.events.size();
  s["events_by_kind"] = kinds;
  s["max_events_per_ms"] = worst;
  const auto& f = tr.final_state;
  s["final_state"] = {{"q", hybrid::index(f.q)}, {"H", f.h}, {"z", f.z}, {"vz", f.vz},
                      {"history_pairs", f.hist.minima.size()}};
  const auto& n = tr.counters;
  s["counters"] = {{"steps", n.steps},
                   {"gpm_b_calls", n.gpm_b_calls},
                   {"mu_gpm_calls", n.mu_gpm_calls},
                   {"bisection_steps", n.bisection_steps},
                   {"outside_bounds", n.outside_bounds}};
  return s;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  config::Config c = base_config(o);
  if (!o.waveform.empty()) c.waveform.csv = std::filesystem::absolute(o.waveform).string();
  c.validate();
  const auto table = c.load_table();
  const auto wave = c.load_waveform();
  const hybrid::Plant plant(c.plant, table);
  const auto init = hybrid::demagnetized_rest(plant, c.demag_n, c.demag_range);

  const std::string traj_path = o.out + ".trajectory.csv";
  const std::string events_path = o.out + ".events.jsonl";
  const std::vector<std::string> outputs{traj_path, events_path, o.out + ".report.json"};
  try {
    const auto tr = hybrid::simulate(init, wave, plant, c.sim);
    write_trajectory(traj_path, tr);
    write_events(events_path, tr);
    json s = trajectory_summary(tr);
    s["status"] = "ok";
    write_report(o.out, "simulate", config::hash(c), seconds_since(t0), outputs, s);
    out << "simulate: " << tr.records.size() << " records, " << tr.events.size()
        << " events, final mode " << hybrid::index(tr.final_state.q) << " -> " << traj_path
        << "\n";
    return kOk;
  } catch (const hybrid::SimulationError& e) {
    write_trajectory(traj_path, e.prefix());
    write_events(events_path, e.prefix());
    json s = trajectory_summary(e.prefix());
    s["status"] = "failed";
    s["error"] = e.what();
    write_report(o.out, "simulate", config::hash(c), seconds_since(t0), outputs, s);
    err << "error: " << e.what() << " (partial trajectory written)\n";
    return kRuntimeFailure;
  }
}

// ---------------------------------------------------------------------------

json fit_json(const std::string& stage, const std::vector<std::pair<std::string, double>>& params,
              const optimize::FitResult& f) {
  json j;
  j["stage"] = stage;
  json p = json::object();
  for (const auto& [k, v] : params) p[k] = v;
  j["parameters"] = p;
  j["objective"] = f.objective;
  j["initial_objective"] = f.initial_objective;
  j["iterations"] = f.iterations;
  j["evaluations"] = f.evaluations;
  j["converged"] = f.converged;
  j["message"] = f.message;
  return j;
}

int cmd_identify(const std::string& stage, const Options& o, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string params_path = o.out + ".params.json";
  config::Config c;
  if (std::filesystem::exists(params_path) && stage != "rev") {
    c = config::load(params_path);
    if (o.dt > 0.0) c.sim.dt = o.dt;
    if (o.seed >= 0) c.optimizer.seed = static_cast<std::uint64_t>(o.seed);
  } else {
    c = base_config(o);
  }
  if (stage == "gpm" && !c.has_stage("rev")) {
    throw OrderingError("identify gpm needs the rev stage first (" + params_path + ")");
  }
  if (stage == "kec" && !c.has_stage("gpm")) {
    throw OrderingError("identify kec needs the gpm stage first (" + params_path + ")");
  }
  c.validate();
  const auto files = expand(o.data);
  if (files.empty()) throw InvalidArgument("no data files match '" + o.data + "'");
  std::vector<id::ExperimentRecord> records;
  for (const auto& f : files) records.push_back(id::ExperimentRecord::load(f));
  const auto table = c.load_table();

  json result;
  auto& g = c.plant.gpm;
  if (stage == "rev") {
    std::vector<id::ReversalPoint> pts;
    std::vector<std::string> warnings;
    for (const auto& r : records) {
      const auto p = id::extract_reversal_slopes(id::derive_bh(r, c.plant.actuator, table), 5,
                                                 &warnings);
      pts.insert(pts.end(), p.begin(), p.end());
    }
    for (const auto& w : warnings) err << "warning: " << w << "\n";
    const auto fit = id::fit_rev(pts, c.optimizer);
    g.rev = fit.rev;
    result = fit_json("rev",
                      {{"mu1", g.rev.mu1}, {"mu2", g.rev.mu2}, {"h1", g.rev.h1}, {"h2", g.rev.h2}},
                      fit.fit);
    result["reversal_points"] = pts.size();
    c.identified = {"rev"};
  } else if (stage == "gpm") {
    std::vector<id::BhSeries> loops;
    for (const auto& r : records) loops.push_back(id::derive_bh(r, c.plant.actuator, table));
    id::GpmFitOptions opt;
    opt.opt = c.optimizer;
    opt.demag_n = c.demag_n;
    opt.demag_range = c.demag_range;
    const auto fit = id::fit_gpm(loops, g.rev, opt);
    g.dist = fit.dist;
    g.b_irr_sat = fit.b_irr_sat;
    result = fit_json("gpm",
                      {{"m_hc", g.dist.coercive.location},
                       {"s_hc", g.dist.coercive.scale},
                       {"s_hm", g.dist.interaction.scale},
                       {"b_irr_sat", g.b_irr_sat}},
                      fit.fit);
    result["identifiable"] = fit.identifiable;
    if (!fit.identifiable) err << "warning: irreversible part is negligible; m_hc, s_hc, s_hm are not determined\n";
    c.identified = {"rev", "gpm"};
  } else {
    id::KecFitOptions opt;
    opt.opt = c.optimizer;
    opt.sim = c.sim;
    opt.demag_n = c.demag_n;
    const auto fit = id::fit_kec(records, c.plant, table, opt);
    c.plant.actuator.eddy.k_ec = fit.k_ec;
    result = fit_json("kec", {{"k_ec", fit.k_ec}}, fit.fit);
    result["rejected_candidates"] = fit.rejected;
    c.identified = {"rev", "gpm", "kec"};
  }
  result["records"] = files.size();
  result["config_hash"] = config::hash(c);

  // The merged file may live elsewhere than the config it came from.
  for (std::string* p : {&c.reluctance.table, &c.waveform.csv}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) {
      *p = std::filesystem::absolute(c.base_dir / *p).string();
    }
  }
  const std::string fit_path = o.out + "." + stage + ".json";
  write_text(fit_path, result.dump(2) + "\n");
  config::save(c, params_path);
  json s;
  s["stage"] = stage;
  s["objective"] = result["objective"];
  s["parameters"] = result["parameters"];
  write_report(o.out, "identify " + stage, config::hash(c), seconds_since(t0),
               {fit_path, params_path, o.out + ".report.json"}, s);
  out << "identify " << stage << ": objective " << std::setprecision(6)
      << static_cast<double>(result["objective"]) << " -> " << fit_path << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_degauss(const Options& o, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  config::Config c = base_config(o);
  c.validate();
  const double amp = o.amplitude > 0.0 ? o.amplitude : c.demag_range;
  const auto sig = id::degauss_waveform(amp, o.decay, o.cycles, o.samples_per_cycle, o.frequency);
  const auto table = c.load_table();
  const hybrid::Plant plant(c.plant, table);
  const auto& a = c.plant.actuator;
  const double r_air = table(c.plant.mech.z_max).r_air;

  // Replay from positive saturation.
  hysteresis::Staircase s(plant.gpm(), {}, hysteresis::Direction::Increasing);
  s.advance(c.plant.gpm.alpha0);
  const std::string path = o.out + ".degauss.csv";
  std::ofstream f(path);
  if (!f) throw InvalidArgument("cannot write '" + path + "'");
  f << "t_s,H_A_per_m,i_A,B_T\n";
  double b_end = s.b(c.plant.gpm.alpha0);
  for (std::size_t k = 0; k < sig.t.size(); ++k) {
    b_end = s.advance(sig.y[k]);
    const double i = (sig.y[k] * a.core.l_iron + a.core.a_iron * b_end * r_air) / a.coil.turns;
    f << csv::format(sig.t[k]) << ',' << csv::format(sig.y[k]) << ',' << csv::format(i) << ','
      << csv::format(b_end) << '\n';
  }
  json sum;
  sum["samples"] = sig.t.size();
  sum["residual_B_T"] = b_end;
  sum["history_pairs"] = s.history().minima.size();
  write_report(o.out, "degauss", config::hash(c), seconds_since(t0), {path, o.out + ".report.json"},
               sum);
  out << "degauss: " << sig.t.size() << " samples, residual B " << b_end << " T -> " << path
      << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct Check {
  std::string name;
  bool pass;
  std::string detail;
};

int cmd_selfcheck(const Options& o, std::ostream& out) {
  const config::Config c = base_config(o);
  std::vector<Check> checks;
  auto run = [&](const std::string& name, const std::function<std::string()>& body) {
    try {
      checks.push_back({name, true, body()});
    } catch (const std::exception& e) {
      checks.push_back({name, false, e.what()});
    }
  };
  auto fail = [](const std::string& why) { throw std::runtime_error(why); };
  auto fmt = [](double v) {
    std::ostringstream s;
    s << std::setprecision(3) << v;
    return s.str();
  };

  run("config_valid", [&] {
    c.validate();
    return std::string("all sections valid");
  });
  run("rev_positivity", [&] {
    const double m = c.plant.gpm.rev.min_permeability();
    if (!(m > 0.0)) fail("mu_rev minimum " + fmt(m) + " H/m is not positive");
    return "min mu_rev " + fmt(m) + " H/m";
  });
  std::optional<magnetics::ReluctanceTable> table;
  run("reluctance_table", [&] {
    table.emplace(c.load_table());
    if (table->z_min() > c.plant.mech.z_min || table->z_max() < c.plant.mech.z_max) {
      fail("table does not span the stroke");
    }
    return std::to_string(table->knots().size()) + " knots";
  });

  std::optional<hysteresis::GpmModel> model;
  run("gpm_model", [&] {
    model.emplace(c.plant.gpm);
    return "T0 = " + fmt(model->t0());
  });
  if (model) {
    const auto& p = model->params();
    run("triangle_oracle", [&] {
      // 2-D quadrature of P over the triangle, inner integral over beta.
      double worst = 0.0;
      const quadrature::Tolerance tol{1e-11, 1e-300, 2000};
      for (const auto& [al, be] : {std::pair{500.0, -300.0}, std::pair{2000.0, -1500.0},
                                   std::pair{9000.0, 100.0}}) {
        const auto outer = quadrature::integrate(
            [&](double a) {
              return quadrature::integrate(
                         [&](double b) { return hysteresis::preisach_density(a, b, p.dist); }, be,
                         a, tol)
                  .value;
            },
            be, al, {1e-10, 1e-300, 2000});
        const double t = model->triangle(al, be);
        worst = std::max(worst, std::abs(t - outer.value) / outer.value);
      }
      if (worst > 1e-6) fail("relative error " + fmt(worst));
      return "max relative error " + fmt(worst);
    });
    run("permeability_fd", [&] {
      std::mt19937_64 rng(7);
      std::uniform_real_distribution<double> u(-0.8, 0.8);
      double worst = 0.0;
      for (int k = 0; k < 20; ++k) {
        hysteresis::Staircase s(*model, {}, hysteresis::Direction::Increasing);
        s.advance(p.beta0);
        for (int j = 0; j < 4; ++j) s.advance(u(rng) * p.alpha0);
        // Just past the innermost reversal, on the current branch.
        const double h0 = s.direction() == hysteresis::Direction::Increasing
                              ? s.history().minima.empty() ? p.beta0 : s.history().minima.back()
                              : s.history().maxima.empty() ? p.alpha0 : s.history().maxima.back();
        const double sign = s.direction() == hysteresis::Direction::Increasing ? 1.0 : -1.0;
        const double x = h0 + sign * 50.0;
        const double eps = 1e-2;
        const double fd = (s.b(x + eps) - s.b(x - eps)) / (2 * eps);
        worst = std::max(worst, std::abs(fd - s.mu(x)) / s.mu(x));
      }
      if (worst > 1e-4) fail("relative error " + fmt(worst));
      return "max relative error " + fmt(worst);
    });
    run("reversal_permeability", [&] {
      hysteresis::Staircase s(*model, {}, hysteresis::Direction::Increasing);
      s.advance(p.beta0);
      s.advance(1500.0);
      s.reverse(1500.0);
      const double mi = s.mu_irr(1500.0);
      if (mi != 0.0) fail("mu_irr at reversal = " + fmt(mi));
      return std::string("mu_irr = 0, mu = mu_rev");
    });
    run("saturation", [&] {
      const double b = hysteresis::gpm_b(p.alpha0, {}, hysteresis::Direction::Increasing, *model);
      const double want = hysteresis::b_rev(p.alpha0, p.rev) + p.b_irr_sat;
      if (std::abs(b - want) > 1e-9 * want) fail("B(alpha0) = " + fmt(b) + ", want " + fmt(want));
      return "B(alpha0) = " + fmt(b) + " T";
    });
    if (table) {
      run("guard_sanity", [&] {
        const hybrid::Plant plant(c.plant, *table);
        const auto rest = hybrid::demagnetized_rest(plant, c.demag_n, c.demag_range);
        if (!hybrid::guards(rest, 0.0, plant).empty()) fail("guards enabled at rest with v = 0");
        const auto e = hybrid::flow(rest, 0.0, plant);
        if (std::abs(e.h_dot) > 1e-6) fail("dH/dt at rest = " + fmt(e.h_dot));
        hybrid::SimConfig cfg = c.sim;
        cfg.t_end = 1e-3;
        const auto tr = hybrid::simulate(rest, VoltageWaveform::constant(0.0), plant, cfg);
        if (!tr.events.empty()) fail("zero-input run produced events");
        return std::string("rest is an equilibrium, no events at v = 0");
      });
    }
  }

  bool ok = true;
  out << std::left << std::setw(24) << "check" << std::setw(8) << "result" << "detail\n";
  for (const auto& ch : checks) {
    ok = ok && ch.pass;
    out << std::setw(24) << ch.name << std::setw(8) << (ch.pass ? "PASS" : "FAIL") << ch.detail
        << "\n";
  }
  return ok ? kOk : kSelfCheckFailed;
}

void apply_thread_cap() {
  const char* env = std::getenv("RELUCTSIM_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw InvalidArgument("RELUCTSIM_THREADS must be a positive integer");
  omp_set_num_threads(static_cast<int>(n));
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reluctance actuator simulation and identification", "reluctsim"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* s) {
    s->add_option("--config", o.config, "configuration JSON (defaults: valve parameters)");
    s->add_option("--out", o.out, "output prefix");
    s->add_option("--dt", o.dt, "integration step in seconds")->check(CLI::PositiveNumber);
    s->add_option("--seed", o.seed, "optimizer seed")->check(CLI::NonNegativeNumber);
  };
  auto* sim = app.add_subcommand("simulate", "run the hybrid model on a voltage waveform");
  common(sim);
  sim->add_option("--waveform", o.waveform, "voltage CSV t_s,v_V (overrides the config)");

  auto* ident = app.add_subcommand("identify", "parameter identification stage");
  std::string stage;
  ident->add_option("stage", stage, "rev, gpm or kec")
      ->required()
      ->check(CLI::IsMember({"rev", "gpm", "kec"}));
  common(ident);
  ident->add_option("--data", o.data, "glob of experiment CSV files")->required();

  auto* deg = app.add_subcommand("degauss", "decaying sinusoid and its GPM replay");
  common(deg);
  deg->add_option("--amplitude", o.amplitude, "initial field amplitude, A/m (default demag range)");
  deg->add_option("--decay", o.decay, "envelope factor per cycle");
  deg->add_option("--cycles", o.cycles, "number of cycles");
  deg->add_option("--samples-per-cycle", o.samples_per_cycle, "samples per cycle");
  deg->add_option("--frequency", o.frequency, "frequency, Hz");

  auto* self = app.add_subcommand("selfcheck", "fast invariant suite");
  common(self);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInvalidInput;
  }

  try {
    apply_thread_cap();
    if (sim->parsed()) return cmd_simulate(o, out, err);
    if (ident->parsed()) return cmd_identify(stage, o, out, err);
    if (deg->parsed()) return cmd_degauss(o, out);
    return cmd_selfcheck(o, out);
  } catch (const OrderingError& e) {
    err << "error: " << e.what() << "\n";
    return kOrdering;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
}

}  // namespace reluctsim::cli
