#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "reluctsim/hybrid.hpp"
#include "reluctsim/hysteresis.hpp"
#include "reluctsim/magnetics.hpp"
#include "reluctsim/optimize.hpp"

/// Three-stage identification: reversible permeability from reversal slopes,
/// Preisach distribution and saturation by B replay, eddy-current constant by
/// fixed-gap hybrid simulation.
namespace reluctsim::identify {

/// Uniformly sampled experiment at a fixed gap.
struct ExperimentRecord {
  std::vector<double> t;    // s
  std::vector<double> v;    // V, empty for current-driven sets
  std::vector<double> i;    // A
  std::vector<double> phi;  // Wb
  std::optional<double> gap;  // m
  std::string wave;
  double level = 0.0;

  bool has_voltage() const { return !v.empty(); }
  double sample_period() const;
  /// Sizes, finiteness, strictly increasing and uniform t (1e-6 relative).
  void validate() const;

  /// CSV `t_s,v_V,i_A,phi_Wb` (v_V optional) plus the JSON sidecar with the
  /// same stem: {"gap_m": ..., "wave": ..., "level": ...}. A missing sidecar
  /// leaves the metadata empty.
  static ExperimentRecord load(const std::filesystem::path& csv_path);
  void save(const std::filesystem::path& csv_path) const;
};

struct BhSeries {
  std::vector<double> h;  // A/m
  std::vector<double> b;  // T
};

/// H from the eddy-free Ampere balance at the record's gap, B = phi / A_iron.
BhSeries derive_bh(const ExperimentRecord& rec, const magnetics::ActuatorParams& p,
                   const magnetics::ReluctanceTable& table);

struct ReversalPoint {
  double h;      // A/m
  double slope;  // H/m
};

/// Reversals are samples where the discrete direction of H flips. The slope is
/// the least-squares line through the reversal sample and the `window`
/// samples after it. Reversals too close to the end or with a non-positive
/// slope are skipped and reported in `warnings`.
std::vector<ReversalPoint> extract_reversal_slopes(const BhSeries& s, int window = 5,
                                                   std::vector<std::string>* warnings = nullptr);

struct RevFit {
  hysteresis::RevParams rev;
  optimize::FitResult fit;  // objective: RMSE in H/m
};

/// Seeds (H1, H2) on a quarter-decade grid with (mu1, mu2) by linear least
/// squares, then minimizes over (H1, H2) with the linear part solved exactly
/// at every candidate. Candidates violating mu_rev > 0 are rejected.
RevFit fit_rev(const std::vector<ReversalPoint>& points, const optimize::Options& opt = {});

struct GpmFitOptions {
  optimize::Options opt;
  std::size_t demag_n = 100;
  double demag_range = 1e4;  // A/m, also alpha0 = -beta0
  // Fit on every stride-th sample plus every reversal sample. The replayed
  // memory only depends on the reversals, so this is a subsample of the
  // full-rate residuals.
  int stride = 4;
  bool parallel = true;
};

/// Every stride-th sample, the reversal samples and the last sample.
BhSeries decimate(const BhSeries& s, int stride);

/// RMSE (T) of the GPM replay against the measured B over all loops jointly.
/// Each loop starts from the demagnetizing staircase.
double gpm_objective(const std::vector<BhSeries>& loops, const hysteresis::GpmParams& p,
                     std::size_t demag_n);
/// Same value, one loop after another on the calling thread (reference).
double gpm_objective_serial(const std::vector<BhSeries>& loops, const hysteresis::GpmParams& p,
                            std::size_t demag_n);

struct GpmFit {
  hysteresis::PreisachDistribution dist;
  double b_irr_sat = 0.0;
  optimize::FitResult fit;  // objective: RMSE in T
  // False when the fitted irreversible part is negligible, in which case
  // the distribution parameters are not determined by the data.
  bool identifiable = true;
};

GpmFit fit_gpm(const std::vector<BhSeries>& loops, const hysteresis::RevParams& rev,
               const GpmFitOptions& opt = {});

struct KecFitOptions {
  optimize::Options opt;
  hybrid::SimConfig sim;  // t_end is taken from each record
  std::size_t demag_n = 100;
  bool parallel = true;
  double k_max = 1e7;  // A/V
};

/// Weighted current/flux error of a fixed-gap simulation against the records:
/// sqrt(sum di^2 / sum i^2 + sum dphi^2 / sum phi^2) over all samples.
/// Infinite when a simulation fails.
double kec_objective(const std::vector<ExperimentRecord>& records, const hybrid::PlantParams& base,
                     const magnetics::ReluctanceTable& table, double k_ec,
                     const KecFitOptions& opt);

struct KecFit {
  double k_ec = 0.0;
  optimize::FitResult fit;
  int rejected = 0;  // candidates whose simulation failed
};

/// Records must carry voltage and a gap at one stroke end. Seeded at N^2/R.
KecFit fit_kec(const std::vector<ExperimentRecord>& records, const hybrid::PlantParams& base,
               const magnetics::ReluctanceTable& table, const KecFitOptions& opt = {});

/// Exponentially decaying sinusoid sampled `samples_per_cycle` times per
/// cycle; the envelope shrinks by `decay` every cycle and the last sample is
/// 0. `cycles` = 0 gives an empty signal. Requires decay^cycles < 1e-3.
struct Signal {
  std::vector<double> t;
  std::vector<double> y;
};
Signal degauss_waveform(double amplitude, double decay, int cycles, int samples_per_cycle,
                        double frequency = 10.0);

// ---------------------------------------------------------------------------
// Synthetic experiments generated by the forward model (tests, self-check,
// round trips). Loops come from a prescribed field waveform with no eddy
// currents; square-wave records from pinned hybrid simulation.

/// Field-driven quasi-static loop from the demagnetized state:
/// H(t) = level (sin wt + minor sin(8 wt)), `periods` periods at `frequency`.
ExperimentRecord synthetic_loop(const hybrid::Plant& plant, double level, double z,
                                int periods = 2, int samples_per_period = 4000,
                                double minor = 0.1, double frequency = 10.0,
                                std::size_t demag_n = 100);

/// Bipolar square voltage (+level for half a period, then -level) for
/// `periods` periods, simulated with the plunger pinned at z_min from
/// demagnetized rest, sampled every `sample_dt`.
ExperimentRecord synthetic_square(const hybrid::Plant& plant, double level, double period,
                                  int periods, double sample_dt, double sim_dt = 1e-6,
                                  std::size_t demag_n = 100);

/// Multiplies every sample of `x` by (1 + rel * N(0,1)), seeded.
void add_noise(std::vector<double>& x, double rel, std::uint64_t seed);

}  // namespace reluctsim::identify
