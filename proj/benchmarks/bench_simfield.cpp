#include <benchmark/benchmark.h>

#include <vector>

#include "stcov/covmodels.hpp"
#include "stcov/rng.hpp"
#include "stcov/simfield.hpp"

using namespace stcov;

static void BM_BlockSamplerBuild(benchmark::State& state) {
  const auto spec = CovarianceSpec::gneiting_sep(0.5);
  for (auto _ : state) {
    BlockSequentialSampler sampler(spec, unit_grid(4, 4), 2000, static_cast<std::size_t>(state.range(0)));
    benchmark::DoNotOptimize(sampler.jitter());
  }
}
BENCHMARK(BM_BlockSamplerBuild)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

// Draws per call: 1 is the observation path, 8 the batched replicate path.
static void BM_BlockSamplerDraw(benchmark::State& state) {
  const BlockSequentialSampler sampler(CovarianceSpec::gneiting_sep(0.5), unit_grid(4, 4), 2000, 100);
  std::vector<std::uint64_t> streams(static_cast<std::size_t>(state.range(0)));
  std::uint64_t next = 0;
  for (auto _ : state) {
    for (auto& s : streams) s = derive_stream(1, {next++});
    benchmark::DoNotOptimize(sampler.sample_many(streams));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BlockSamplerDraw)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_KronSamplerDraw(benchmark::State& state) {
  const auto sites = unit_grid(4, 4);
  const auto spatial = build_covariance_matrix(CovarianceSpec::gneiting_sep(0.0), sites, std::vector<double>{0.0});
  std::vector<double> temporal(2000);
  for (std::size_t u = 0; u < temporal.size(); ++u) temporal[u] = 1.0 / (1.0 + 0.5 * static_cast<double>(u));
  const KronSampler sampler(spatial, temporal, sites);
  std::uint64_t next = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(derive_stream(2, {next++})));
}
BENCHMARK(BM_KronSamplerDraw)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
