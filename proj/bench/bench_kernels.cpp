// Serial reference kernels against their OpenMP counterparts.
//
//   clubkit_bench --benchmark_filter=Bootstrap
//
// Set OMP_NUM_THREADS to vary the parallel side.

#include <benchmark/benchmark.h>

#include <random>

#include "clubkit/arma.hpp"
#include "clubkit/bootstrap.hpp"
#include "clubkit/kpss.hpp"
#include "clubkit/montecarlo.hpp"

using namespace clubkit;

namespace {

std::vector<ArmaFit> pair_fits(int series, int T) {
  Engine rng(derive_seed(3, "bench-fits", {}));
  std::normal_distribution<double> g;
  std::vector<ArmaFit> fits;
  for (int k = 0; k < series; ++k) {
    std::vector<double> level(T);
    double e = 0.0;
    for (int t = 0; t < T; ++t) level[t] = e = 0.5 * e + g(rng);
    fits.push_back(fit_difference_model(level, 2));
  }
  return fits;
}

BootstrapConfig boot_config() {
  BootstrapConfig cfg;
  cfg.R = 400;
  cfg.seed = 1;
  return cfg;
}

void BM_BootstrapDrawsSerial(benchmark::State& state) {
  const auto fits = pair_fits(static_cast<int>(state.range(0)), 100);
  const auto cfg = boot_config();
  for (auto _ : state) benchmark::DoNotOptimize(serial::bootstrap_null_draws(fits, 100, cfg, 7));
}

void BM_BootstrapDrawsParallel(benchmark::State& state) {
  const auto fits = pair_fits(static_cast<int>(state.range(0)), 100);
  const auto cfg = boot_config();
  for (auto _ : state) benchmark::DoNotOptimize(bootstrap_null_draws(fits, 100, cfg, 7));
}

LimitTableMeta small_meta() { return {Variant::Level, 2, kMinGridT, kMinLimitReps, 99}; }

void BM_LimitTableSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(serial::simulate_limit_table(small_meta()));
}

void BM_LimitTableParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(simulate_limit_table(small_meta()));
}

ExperimentSpec small_experiment() {
  ExperimentSpec spec;
  spec.cells = {DgpConfig{10, 50, 0.2, SingleClub{3}, 5}};
  spec.methods = {Method::Asymptotic};
  spec.reps = 20;
  spec.seed = 5;
  return spec;
}

// Built before timing so both sides look tables up instead of simulating them.
InMemoryLimitTables& bench_tables() {
  static InMemoryLimitTables tables(kMinGridT, kMinLimitReps, 20240101);
  static const bool warm = [] {
    for (int dim = 1; dim <= 9; ++dim) tables.table(Variant::Level, dim);
    return true;
  }();
  (void)warm;
  return tables;
}

void BM_ExperimentSerial(benchmark::State& state) {
  const auto spec = small_experiment();
  auto& tables = bench_tables();
  for (auto _ : state) benchmark::DoNotOptimize(serial::run_experiment(spec, &tables));
}

void BM_ExperimentParallel(benchmark::State& state) {
  const auto spec = small_experiment();
  auto& tables = bench_tables();
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(spec, &tables));
}

}  // namespace

BENCHMARK(BM_BootstrapDrawsSerial)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BootstrapDrawsParallel)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LimitTableSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LimitTableParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExperimentSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExperimentParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
