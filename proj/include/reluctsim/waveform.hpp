#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace reluctsim {

/// Piecewise coil-voltage input. Segment k covers [t_k, t_{k+1}); the last
/// segment extends to +inf. Zero-order hold keeps v_k on the segment, linear
/// interpolates toward v_{k+1} (and holds after the last sample).
class VoltageWaveform {
 public:
  enum class Interp { ZeroOrderHold, Linear };

  VoltageWaveform() : VoltageWaveform({0.0}, {0.0}) {}
  VoltageWaveform(std::vector<double> t, std::vector<double> v,
                  Interp interp = Interp::ZeroOrderHold);

  static VoltageWaveform constant(double v);
  /// Square pulses: pulse k switches to levels[k] at k*period + delay, and
  /// back to 0 after `on_time`.
  static VoltageWaveform pulse_train(const std::vector<double>& levels, double period,
                                     double on_time, double delay = 0.0);
  /// CSV `t_s,v_V` with zero-order hold.
  static VoltageWaveform load_csv(const std::filesystem::path& path);
  void save_csv(const std::filesystem::path& path) const;

  /// Index of the segment containing t (right-continuous at breakpoints).
  std::size_t segment(double t) const;
  /// Value on segment k at time t, without switching segments.
  double value(double t, std::size_t k) const;
  double operator()(double t) const { return value(t, segment(t)); }
  /// Start of the segment after k, or +inf.
  double next_break(std::size_t k) const;
  double max_abs() const;

  const std::vector<double>& times() const { return t_; }
  const std::vector<double>& values() const { return v_; }
  Interp interp() const { return interp_; }

 private:
  std::vector<double> t_, v_;
  Interp interp_;
};

}  // namespace reluctsim
