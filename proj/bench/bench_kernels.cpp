// Serial vs OpenMP timings for the identification objectives and the
// hysteron-grid oracle, plus the reference valve run.

#include <benchmark/benchmark.h>

#include "fixtures.hpp"
#include "oracles/hysteron_grid.hpp"
#include "reluctsim/hybrid.hpp"
#include "reluctsim/identify.hpp"

using namespace reluctsim;
namespace id = reluctsim::identify;

namespace {

const std::vector<id::BhSeries>& loops() {
  static const auto out = [] {
    std::vector<id::BhSeries> v;
    for (double level : {300.0, 600.0, 1000.0, 1600.0, 2500.0, 4000.0, 6000.0, 9000.0}) {
      const auto rec = id::synthetic_loop(fx::valve_plant(), level, 0.0);
      v.push_back(id::decimate(id::derive_bh(rec, fx::valve_params().actuator, fx::valve_table()), 4));
    }
    return v;
  }();
  return out;
}

const std::vector<id::ExperimentRecord>& squares() {
  static const auto out = [] {
    std::vector<id::ExperimentRecord> v;
    for (double level : {1.0, 5.0, 10.0, 18.0}) {
      v.push_back(id::synthetic_square(fx::valve_plant(), level, 0.01, 1, 1e-5));
    }
    return v;
  }();
  return out;
}

void BM_gpm_objective_serial(benchmark::State& st) {
  const auto p = fx::valve_gpm();
  for (auto _ : st) benchmark::DoNotOptimize(id::gpm_objective_serial(loops(), p, 100));
}
void BM_gpm_objective_parallel(benchmark::State& st) {
  const auto p = fx::valve_gpm();
  for (auto _ : st) benchmark::DoNotOptimize(id::gpm_objective(loops(), p, 100));
}

void kec(benchmark::State& st, bool parallel) {
  id::KecFitOptions opt;
  opt.sim.dt = 5e-6;
  opt.parallel = parallel;
  const auto base = fx::valve_params();
  const auto table = fx::valve_table();
  for (auto _ : st) benchmark::DoNotOptimize(id::kec_objective(squares(), base, table, 1500.0, opt));
}
void BM_kec_objective_serial(benchmark::State& st) { kec(st, false); }
void BM_kec_objective_parallel(benchmark::State& st) { kec(st, true); }

const oracle::HysteronGrid& grid200() {
  static const oracle::HysteronGrid g(fx::valve_gpm(), 200);
  return g;
}

// One 50-reversal sweep at four samples per leg.
template <bool Parallel>
void BM_hysteron_grid(benchmark::State& st) {
  auto g = grid200();
  fx::Gen gen(7);
  const auto rev = gen.reversals(50, 1e4);
  for (auto _ : st) {
    g.saturate_negative();
    double prev = -1e4, acc = 0.0;
    for (double r : rev) {
      for (int k = 1; k <= 4; ++k) {
        const double h = prev + (r - prev) * k / 4.0;
        if constexpr (Parallel) {
          g.apply(h);
          acc += g.output();
        } else {
          g.apply_serial(h);
          acc += g.output_serial();
        }
      }
      prev = r;
    }
    benchmark::DoNotOptimize(acc);
  }
}

void BM_valve_100ms(benchmark::State& st) {
  const auto init = hybrid::demagnetized_rest(fx::valve_plant());
  const auto wave = VoltageWaveform::pulse_train({18.0, 20.0, 22.0, 24.0, 26.0}, 0.02, 0.01);
  hybrid::SimConfig cfg;
  for (auto _ : st) {
    const auto tr = hybrid::simulate(init, wave, fx::valve_plant(), cfg);
    benchmark::DoNotOptimize(tr.records.size());
  }
}

}  // namespace

BENCHMARK(BM_gpm_objective_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_gpm_objective_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_kec_objective_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_kec_objective_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_hysteron_grid<false>)->Name("BM_hysteron_grid_serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_hysteron_grid<true>)->Name("BM_hysteron_grid_parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_valve_100ms)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
