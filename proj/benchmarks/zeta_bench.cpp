#include <benchmark/benchmark.h>

#include "membrane/box.hpp"
#include "membrane/pinned_measure.hpp"

using namespace membrane;

namespace {

std::vector<Site> path(std::int64_t n) {
  std::vector<Site> s;
  for (std::int64_t k = 0; k < n; ++k) s.push_back(Site{k});
  return s;
}

void BM_ZetaExact(benchmark::State& state) {
  const auto sites = path(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(zeta_exact(1, sites, 1.0).log_normaliser());
  state.counters["subsets"] = static_cast<double>(std::size_t{1} << sites.size());
}
BENCHMARK(BM_ZetaExact)->DenseRange(8, 16, 4)->Unit(benchmark::kMillisecond);

void BM_FkgCheck(benchmark::State& state) {
  const auto z = zeta_exact(1, path(state.range(0)), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(fkg_lattice_check(z).pairs_checked);
}
BENCHMARK(BM_FkgCheck)->Arg(6)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_DominationExhaustive(benchmark::State& state) {
  const auto z = zeta_exact(2, block(Site(2), 3).sites(), 0.5);
  for (auto _ : state)
    benchmark::DoNotOptimize(strong_domination_check(z, 0.0, DominationDirection::dominates).pairs_checked);
}
BENCHMARK(BM_DominationExhaustive)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
