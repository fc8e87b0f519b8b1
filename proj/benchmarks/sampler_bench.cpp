#include <benchmark/benchmark.h>

#include "membrane/box.hpp"
#include "membrane/heat_bath.hpp"

using namespace membrane;

namespace {

void BM_HeatBathSweep(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  HeatBath hb(d, centred_block(d, state.range(1)).sites(), 1e-2, 1);
  for (auto _ : state) hb.sweep();
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(hb.size()));
}
BENCHMARK(BM_HeatBathSweep)->Args({1, 64})->Args({2, 32})->Args({4, 8})->Args({4, 12})->Unit(benchmark::kMicrosecond);

void BM_EstimateVariance(benchmark::State& state) {
  ChainConfig c;
  c.dim = 4;
  c.sites = centred_block(4, 6).sites();
  c.epsilon = 1e-2;
  c.burn_in = 100;
  c.sweeps = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_variance(c, Site(4)).mean);
}
BENCHMARK(BM_EstimateVariance)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
