#include <benchmark/benchmark.h>

#include "prefine/pair_constraints.hpp"
#include "prefine/synthgen.hpp"

namespace {

prefine::DatasetBundle with_pairs(std::size_t pairs) {
  prefine::SynthConfig cfg;
  cfg.pair_ratio = double(pairs) / double(cfg.sample_count());
  return prefine::generate(cfg).bundle;
}

void BM_SelectOptimal(benchmark::State& state) {
  const auto b = with_pairs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(prefine::select_optimal(b.pairs, b.embeddings, 20));
  state.counters["pairs"] = double(b.pairs.size());
}
BENCHMARK(BM_SelectOptimal)->Arg(8)->Arg(64)->Arg(144)->Unit(benchmark::kMillisecond);

void BM_SelectPartial(benchmark::State& state) {
  const auto b = with_pairs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        prefine::select(prefine::Strategy::partial, b.pairs, b.embeddings, 20, 0));
  }
}
BENCHMARK(BM_SelectPartial)->Arg(8)->Arg(144)->Unit(benchmark::kMillisecond);

void BM_BruteForce(benchmark::State& state) {
  const auto b = with_pairs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(prefine::brute_force_select(b.pairs, b.embeddings, 20));
  }
}
BENCHMARK(BM_BruteForce)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace
