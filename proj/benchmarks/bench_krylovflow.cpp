#include <benchmark/benchmark.h>

#include "krylovflow/analysis.hpp"
#include "krylovflow/bilanczos.hpp"
#include "krylovflow/bound.hpp"
#include "krylovflow/continuum.hpp"
#include "krylovflow/krylov_chain.hpp"
#include "krylovflow/lindbladian.hpp"
#include "krylovflow/spin_algebra.hpp"

using namespace krylovflow;

namespace {

ModelSpec reference_model(int sites) { return ModelSpec::with_default_placement(sites, -1.05, 0.5, 0.01, 0.01); }

Superoperator lindbladian(int sites) {
  const auto spec = reference_model(sites);
  return build_lindbladian(build_tfim(spec), build_jump_operators(spec));
}

}  // namespace

static void BM_BuildLindbladian(benchmark::State& state) {
  const auto spec = reference_model(static_cast<int>(state.range(0)));
  const auto H = build_tfim(spec);
  const auto jumps = build_jump_operators(spec);
  for (auto _ : state) benchmark::DoNotOptimize(build_lindbladian(H, jumps));
}
BENCHMARK(BM_BuildLindbladian)->DenseRange(2, 5)->Unit(benchmark::kMillisecond);

static void BM_BiLanczos(benchmark::State& state) {
  const auto op = lindbladian(static_cast<int>(state.range(0)));
  const auto seed = uniform_seed(op.hilbert_dim());
  BiLanczosConfig cfg;
  cfg.store_bases = false;
  for (auto _ : state) {
    const auto tri = bilanczos(op, seed, seed, cfg);
    state.counters["K"] = tri.krylov_dim();
  }
}
BENCHMARK(BM_BiLanczos)->DenseRange(2, 4)->Unit(benchmark::kMillisecond);

static void BM_BiLanczosFirst50(benchmark::State& state) {
  const auto op = lindbladian(5);
  const auto seed = uniform_seed(op.hilbert_dim());
  BiLanczosConfig cfg;
  cfg.max_iter = 50;
  cfg.store_bases = false;
  for (auto _ : state) benchmark::DoNotOptimize(bilanczos(op, seed, seed, cfg));
}
BENCHMARK(BM_BiLanczosFirst50)->Unit(benchmark::kMillisecond);

static void BM_EvolveChain(benchmark::State& state) {
  const auto op = lindbladian(static_cast<int>(state.range(0)));
  const auto seed = uniform_seed(op.hilbert_dim());
  const auto tri = bilanczos(op, seed, seed);
  const auto grid = uniform_grid(10.0, 400);
  for (auto _ : state) benchmark::DoNotOptimize(moments(evolve_chain(tri, grid)));
}
BENCHMARK(BM_EvolveChain)->DenseRange(2, 4)->Unit(benchmark::kMillisecond);

static void BM_SaturatingChain(benchmark::State& state) {
  const auto tri = saturating_coefficients(1.0, 1.0, static_cast<int>(state.range(0)));
  const auto grid = uniform_grid(10.0, 400);
  for (auto _ : state) {
    const auto m = moments(evolve_chain(tri, grid));
    benchmark::DoNotOptimize(dispersion_bound_check(m, tri.b[0], 1e-6));
  }
}
BENCHMARK(BM_SaturatingChain)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

static void BM_Characteristics(benchmark::State& state) {
  ContinuumSpec spec;
  spec.kind = ContinuumCase::kLinearA;
  spec.alpha = 3.0;
  spec.beta = 2.0;
  const auto grid = uniform_grid(3.0, 301);
  for (auto _ : state) benchmark::DoNotOptimize(characteristics_solver(spec, grid));
}
BENCHMARK(BM_Characteristics)->Unit(benchmark::kMicrosecond);

static void BM_FilterSeries(benchmark::State& state) {
  Series s(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = 1.0 + 0.01 * static_cast<double>(i) + (i % 37 == 0 ? 5.0 : 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(filter_series(s, FilterConfig{}));
}
BENCHMARK(BM_FilterSeries)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
