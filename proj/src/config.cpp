#include "reluctsim/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "reluctsim/constants.hpp"
#include "reluctsim/errors.hpp"

namespace reluctsim::config {

using json = nlohmann::ordered_json;

namespace {

// Reads the keys of one section, rejecting anything it was not asked about.
class Section {
 public:
  Section(const json& root, const std::string& name, const std::string& source)
      : where_(source + ": " + name) {
    if (!root.contains(name)) return;
    node_ = &root.at(name);
    if (!node_->is_object()) throw InvalidArgument(where_ + " must be an object");
  }

  template <class T>
  void get(const std::string& key, T& dst) {
    seen_.insert(key);
    if (!node_ || !node_->contains(key)) return;
    try {
      dst = node_->at(key).get<T>();
    } catch (const json::exception&) {
      throw InvalidArgument(where_ + "." + key + " has the wrong type");
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_ && node_->contains(key);
  }

  void finish() const {
    if (!node_) return;
    for (const auto& [key, value] : node_->items()) {
      if (!seen_.count(key)) throw InvalidArgument(where_ + ": unknown key '" + key + "'");
    }
  }

 private:
  std::string where_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

Config valve_defaults() {
  Config c;
  auto& a = c.plant.actuator;
  a.coil = {49.0, 1200};
  a.core = {0.055, 12.57e-6};
  a.eddy = {1637.0};
  c.plant.mech = {1.6e-3, 55.0, 0.015, 0.0, 0.0, 0.9e-3};
  auto& g = c.plant.gpm;
  g.rev = {168.8 * kMu0, 64.13 * kMu0, 1262.0, 8821.0};
  g.dist = hysteresis::PreisachDistribution::from(227.9, 154.9, 138.0);
  g.b_irr_sat = 0.8103;
  g.alpha0 = c.demag_range;
  g.beta0 = -c.demag_range;
  return c;
}

bool Config::has_stage(const std::string& s) const {
  return std::find(identified.begin(), identified.end(), s) != identified.end();
}

void Config::validate() const {
  plant.actuator.validate();
  plant.mech.validate();
  plant.gpm.validate();
  sim.validate();
  if (demag_n < 1) throw InvalidArgument("demag.n must be >= 1");
  if (!(demag_range > 0.0)) throw InvalidArgument("demag.range must be positive");
  if (plant.gpm.alpha0 != demag_range || plant.gpm.beta0 != -demag_range) {
    throw InvalidArgument("gpm bounds must equal +-demag.range");
  }
  if (optimizer.max_iter < 1 || optimizer.restarts < 0 || !(optimizer.x_rel_tol > 0.0) ||
      !(optimizer.f_rel_tol > 0.0)) {
    throw InvalidArgument("optimizer settings out of range");
  }
  if (reluctance.table.empty()) {
    if (!(reluctance.r0 > 0.0) || !(reluctance.a_gap > 0.0) || reluctance.knots < 2) {
      throw InvalidArgument("reluctance fixture needs r0 > 0, a_gap > 0, knots >= 2");
    }
  }
  if (waveform.csv.empty()) {
    (void)VoltageWaveform::pulse_train(waveform.levels, waveform.period, waveform.on_time,
                                       waveform.delay);
  }
  for (const auto& s : identified) {
    if (s != "rev" && s != "gpm" && s != "kec") {
      throw InvalidArgument("unknown identification stage '" + s + "'");
    }
  }
}

magnetics::ReluctanceTable Config::load_table() const {
  if (!reluctance.table.empty()) {
    return magnetics::ReluctanceTable::load_csv(resolve(base_dir, reluctance.table));
  }
  return magnetics::ReluctanceTable::linear_fixture(plant.mech.z_min, plant.mech.z_max,
                                                    reluctance.r0, reluctance.a_gap,
                                                    reluctance.knots);
}

VoltageWaveform Config::load_waveform() const {
  if (!waveform.csv.empty()) return VoltageWaveform::load_csv(resolve(base_dir, waveform.csv));
  return VoltageWaveform::pulse_train(waveform.levels, waveform.period, waveform.on_time,
                                      waveform.delay);
}

Config parse(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(source + ": " + e.what());
  }
  if (!root.is_object()) throw InvalidArgument(source + ": top level must be an object");
  static const std::set<std::string> sections{"coil",  "core",      "eddy",     "mech",
                                              "gpm",   "reluctance", "sim",     "demag",
                                              "optimizer", "waveform", "identified"};
  for (const auto& [key, value] : root.items()) {
    if (!sections.count(key)) throw InvalidArgument(source + ": unknown section '" + key + "'");
  }

  Config c = valve_defaults();
  auto& a = c.plant.actuator;
  {
    Section s(root, "coil", source);
    s.get("resistance", a.coil.resistance);
    s.get("turns", a.coil.turns);
    s.finish();
  }
  {
    Section s(root, "core", source);
    s.get("l_iron", a.core.l_iron);
    s.get("a_iron", a.core.a_iron);
    s.finish();
  }
  {
    Section s(root, "eddy", source);
    s.get("k_ec", a.eddy.k_ec);
    s.finish();
  }
  {
    auto& m = c.plant.mech;
    Section s(root, "mech", source);
    s.get("mass", m.mass);
    s.get("k_s", m.k_s);
    s.get("z_s", m.z_s);
    s.get("c", m.c);
    s.get("z_min", m.z_min);
    s.get("z_max", m.z_max);
    s.finish();
  }
  {
    auto& g = c.plant.gpm;
    Section s(root, "gpm", source);
    for (auto [key, dst] : {std::pair{"mu1", &g.rev.mu1}, std::pair{"mu2", &g.rev.mu2}}) {
      const std::string rel = std::string(key) + "_rel_mu0";
      const bool abs_given = s.has(key), rel_given = s.has(rel);
      if (abs_given && rel_given) {
        throw InvalidArgument(source + ": gpm gives both " + key + " and " + rel);
      }
      s.get(key, *dst);
      if (rel_given) {
        double r = 0.0;
        s.get(rel, r);
        *dst = r * kMu0;
      }
    }
    s.get("h1", g.rev.h1);
    s.get("h2", g.rev.h2);
    s.get("b_irr_sat", g.b_irr_sat);
    s.get("m_hc", g.dist.coercive.location);
    s.get("s_hc", g.dist.coercive.scale);
    s.get("s_hm", g.dist.interaction.scale);
    s.finish();
  }
  {
    Section s(root, "reluctance", source);
    s.get("table", c.reluctance.table);
    s.get("r0", c.reluctance.r0);
    s.get("a_gap", c.reluctance.a_gap);
    s.get("knots", c.reluctance.knots);
    s.finish();
  }
  {
    Section s(root, "sim", source);
    s.get("dt", c.sim.dt);
    s.get("t_end", c.sim.t_end);
    s.get("t_tol", c.sim.t_tol);
    s.get("record_stride", c.sim.record_stride);
    s.get("deadband_rel", c.sim.deadband_rel);
    s.get("max_events_per_ms", c.sim.max_events_per_ms);
    s.finish();
  }
  {
    Section s(root, "demag", source);
    s.get("n", c.demag_n);
    s.get("range", c.demag_range);
    s.finish();
    c.plant.gpm.alpha0 = c.demag_range;
    c.plant.gpm.beta0 = -c.demag_range;
  }
  {
    auto& o = c.optimizer;
    Section s(root, "optimizer", source);
    s.get("x_rel_tol", o.x_rel_tol);
    s.get("f_rel_tol", o.f_rel_tol);
    s.get("max_iter", o.max_iter);
    s.get("restarts", o.restarts);
    s.get("initial_step", o.initial_step);
    s.get("seed", o.seed);
    s.finish();
  }
  {
    auto& w = c.waveform;
    Section s(root, "waveform", source);
    s.get("csv", w.csv);
    s.get("levels", w.levels);
    s.get("period", w.period);
    s.get("on_time", w.on_time);
    s.get("delay", w.delay);
    s.finish();
  }
  if (root.contains("identified")) {
    try {
      c.identified = root.at("identified").get<std::vector<std::string>>();
    } catch (const json::exception&) {
      throw InvalidArgument(source + ": identified must be a list of stage names");
    }
  }
  return c;
}

Config load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  Config c = parse(ss.str(), path.string());
  c.base_dir = path.parent_path();
  return c;
}

std::string dump(const Config& c) {
  const auto& a = c.plant.actuator;
  const auto& m = c.plant.mech;
  const auto& g = c.plant.gpm;
  json j;
  j["coil"] = {{"resistance", a.coil.resistance}, {"turns", a.coil.turns}};
  j["core"] = {{"l_iron", a.core.l_iron}, {"a_iron", a.core.a_iron}};
  j["eddy"] = {{"k_ec", a.eddy.k_ec}};
  j["mech"] = {{"mass", m.mass}, {"k_s", m.k_s},     {"z_s", m.z_s},
               {"c", m.c},       {"z_min", m.z_min}, {"z_max", m.z_max}};
  j["gpm"] = {{"mu1", g.rev.mu1},
              {"mu2", g.rev.mu2},
              {"h1", g.rev.h1},
              {"h2", g.rev.h2},
              {"b_irr_sat", g.b_irr_sat},
              {"m_hc", g.dist.coercive.location},
              {"s_hc", g.dist.coercive.scale},
              {"s_hm", g.dist.interaction.scale}};
  j["reluctance"] = json::object();
  if (!c.reluctance.table.empty()) {
    j["reluctance"]["table"] = c.reluctance.table;
  } else {
    j["reluctance"] = {
        {"r0", c.reluctance.r0}, {"a_gap", c.reluctance.a_gap}, {"knots", c.reluctance.knots}};
  }
  j["sim"] = {{"dt", c.sim.dt},
              {"t_end", c.sim.t_end},
              {"t_tol", c.sim.t_tol},
              {"record_stride", c.sim.record_stride},
              {"deadband_rel", c.sim.deadband_rel},
              {"max_events_per_ms", c.sim.max_events_per_ms}};
  j["demag"] = {{"n", c.demag_n}, {"range", c.demag_range}};
  const auto& o = c.optimizer;
  j["optimizer"] = {{"x_rel_tol", o.x_rel_tol}, {"f_rel_tol", o.f_rel_tol},
                    {"max_iter", o.max_iter},   {"restarts", o.restarts},
                    {"initial_step", o.initial_step}, {"seed", o.seed}};
  if (!c.waveform.csv.empty()) {
    j["waveform"] = {{"csv", c.waveform.csv}};
  } else {
    j["waveform"] = {{"levels", c.waveform.levels},
                     {"period", c.waveform.period},
                     {"on_time", c.waveform.on_time},
                     {"delay", c.waveform.delay}};
  }
  j["identified"] = c.identified;
  return j.dump(2) + "\n";
}

void save(const Config& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << dump(c);
}

std::string hash(const Config& c) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : dump(c)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace reluctsim::config
