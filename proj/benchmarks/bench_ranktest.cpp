#include <benchmark/benchmark.h>

#include "stcov/covmodels.hpp"
#include "stcov/ranktest.hpp"
#include "stcov/simfield.hpp"

using namespace stcov;

// One full test at the simulation-study size, with few replicates.
static void BM_RankTest(benchmark::State& state) {
  const auto kind = state.range(0) == 0 ? TestKind::Separability : TestKind::Symmetry;
  const auto spec = kind == TestKind::Separability ? CovarianceSpec::gneiting_sep(0.5) : CovarianceSpec::gneiting_asym(0.05);
  const auto data = simulate_block_sequential(spec, unit_grid(4, 4), 2000, 100, 9);
  RankTestConfig cfg;
  cfg.kind = kind;
  cfg.b = static_cast<std::size_t>(state.range(1));
  cfg.seed = 10;
  for (auto _ : state) benchmark::DoNotOptimize(rank_test(data, cfg).p_value);
}
BENCHMARK(BM_RankTest)->Args({0, 8})->Args({1, 8})->Unit(benchmark::kSecond)->Iterations(1);

BENCHMARK_MAIN();
