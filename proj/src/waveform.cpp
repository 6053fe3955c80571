#include "reluctsim/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "reluctsim/csv.hpp"
#include "reluctsim/errors.hpp"

namespace reluctsim {

VoltageWaveform::VoltageWaveform(std::vector<double> t, std::vector<double> v, Interp interp)
    : t_(std::move(t)), v_(std::move(v)), interp_(interp) {
  if (t_.empty()) throw InvalidArgument("waveform needs at least one sample");
  if (t_.size() != v_.size()) throw InvalidArgument("waveform time and voltage columns differ");
  for (std::size_t k = 0; k < t_.size(); ++k) {
    require_finite(t_[k], "waveform time");
    require_finite(v_[k], "waveform voltage");
    if (k > 0 && !(t_[k] > t_[k - 1])) {
      throw InvalidArgument("waveform times must be strictly increasing (row " +
                            std::to_string(k + 1) + ")");
    }
  }
}

VoltageWaveform VoltageWaveform::constant(double v) { return VoltageWaveform({0.0}, {v}); }

VoltageWaveform VoltageWaveform::pulse_train(const std::vector<double>& levels, double period,
                                             double on_time, double delay) {
  if (!(period > 0.0) || !(on_time > 0.0) || !(on_time < period) || !(delay >= 0.0)) {
    throw InvalidArgument("pulse train needs 0 < on_time < period and delay >= 0");
  }
  std::vector<double> t{0.0}, v{0.0};
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const double start = delay + period * static_cast<double>(k);
    if (start > t.back()) {
      t.push_back(start);
      v.push_back(levels[k]);
    } else {
      v.back() = levels[k];
    }
    t.push_back(start + on_time);
    v.push_back(0.0);
  }
  return VoltageWaveform(std::move(t), std::move(v));
}

VoltageWaveform VoltageWaveform::load_csv(const std::filesystem::path& path) {
  const auto table = csv::read(path, {"t_s", "v_V"});
  try {
    return VoltageWaveform(table.at("t_s"), table.at("v_V"));
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

void VoltageWaveform::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << "t_s,v_V\n";
  for (std::size_t k = 0; k < t_.size(); ++k) {
    out << csv::format(t_[k]) << ',' << csv::format(v_[k]) << '\n';
  }
}

std::size_t VoltageWaveform::segment(double t) const {
  const auto it = std::upper_bound(t_.begin(), t_.end(), t);
  if (it == t_.begin()) return 0;
  return static_cast<std::size_t>(it - t_.begin()) - 1;
}

double VoltageWaveform::value(double t, std::size_t k) const {
  if (interp_ == Interp::ZeroOrderHold || k + 1 >= t_.size()) return v_[k];
  if (t <= t_[k]) return v_[k];
  const double w = (t - t_[k]) / (t_[k + 1] - t_[k]);
  return v_[k] + w * (v_[k + 1] - v_[k]);
}

double VoltageWaveform::next_break(std::size_t k) const {
  return k + 1 < t_.size() ? t_[k + 1] : std::numeric_limits<double>::infinity();
}

double VoltageWaveform::max_abs() const {
  double m = 0.0;
  for (double v : v_) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace reluctsim
