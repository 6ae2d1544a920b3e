#include <benchmark/benchmark.h>

#include "prefine/clustering.hpp"
#include "prefine/reranking.hpp"
#include "prefine/synthgen.hpp"

namespace {

prefine::EmbeddingSet bundle_of(std::size_t n) {
  prefine::SynthConfig cfg;
  cfg.num_identities = n / cfg.samples_per_identity;
  return prefine::generate(cfg).bundle.embeddings;
}

void BM_DistanceMatrix(benchmark::State& state) {
  const auto emb = bundle_of(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(prefine::cosine_distance_matrix(emb));
}
BENCHMARK(BM_DistanceMatrix)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Rerank(benchmark::State& state) {
  const auto emb = bundle_of(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(prefine::rerank(emb, 20));
}
BENCHMARK(BM_Rerank)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Dbscan(benchmark::State& state) {
  const auto emb = bundle_of(static_cast<std::size_t>(state.range(0)));
  const auto jac = prefine::rerank(emb, 20).jaccard;
  for (auto _ : state) benchmark::DoNotOptimize(prefine::dbscan(jac, 0.6, 4));
}
BENCHMARK(BM_Dbscan)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
