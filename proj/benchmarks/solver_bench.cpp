#include <benchmark/benchmark.h>

#include "membrane/box.hpp"
#include "membrane/green_solver.hpp"

using namespace membrane;

namespace {

void BM_AssembleAndFactor(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto sites = centred_block(d, state.range(1)).sites();
  for (auto _ : state) {
    auto g = GreenSolver::assemble(d, sites);
    benchmark::DoNotOptimize(g.log_partition().value);
  }
  state.counters["sites"] = static_cast<double>(sites.size());
}
BENCHMARK(BM_AssembleAndFactor)->Args({2, 32})->Args({2, 64})->Args({4, 6})->Args({4, 8})->Unit(benchmark::kMillisecond);

void BM_GreenColumn(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  SolverOptions o;
  if (state.range(2)) o.direct_limit = 0;
  const auto g = GreenSolver::assemble(d, centred_block(d, state.range(1)).sites(), o);
  for (auto _ : state) benchmark::DoNotOptimize(g.green_vector(Site(d)));
  state.SetLabel(g.backend());
}
BENCHMARK(BM_GreenColumn)->Args({4, 8, 0})->Args({4, 8, 1})->Args({4, 12, 0})->Args({4, 12, 1})->Unit(benchmark::kMillisecond);

void BM_SchurPin(benchmark::State& state) {
  const auto g = DenseGreen::assemble(2, centred_block(2, state.range(0)).sites());
  for (auto _ : state) benchmark::DoNotOptimize(g.pin(Site{0, 0}).log_partition());
}
BENCHMARK(BM_SchurPin)->Arg(4)->Arg(8)->Arg(12);

}  // namespace

BENCHMARK_MAIN();
