#include <benchmark/benchmark.h>

#include <vector>

#include "predepth/knn.hpp"
#include "predepth/prng.hpp"

namespace {

struct Fixture {
  std::vector<float> refs;
  std::vector<std::int32_t> labels;
  std::vector<float> query;
  std::int64_t n;
  int dim;

  Fixture(std::int64_t n, int dim) : n(n), dim(dim) {
    predepth::Rng rng(42);
    refs.resize(static_cast<std::size_t>(n) * dim);
    for (auto& v : refs) v = static_cast<float>(rng.next_gaussian());
    labels.resize(static_cast<std::size_t>(n));
    for (auto& y : labels) y = static_cast<std::int32_t>(rng.bounded(10));
    query.resize(static_cast<std::size_t>(dim));
    for (auto& v : query) v = static_cast<float>(rng.next_gaussian());
  }
};

void BM_knn_classify(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  const int dim = static_cast<int>(state.range(1));
  Fixture f(n, dim);
  auto probe = predepth::build_probe(f.refs, f.n, f.dim, f.labels, 30, 0, 10);
  for (auto _ : state) {
    auto v = probe.classify(f.query);
    benchmark::DoNotOptimize(v.predicted);
  }
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_knn_topk(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  Fixture f(n, 128);
  auto probe = predepth::build_probe(f.refs, f.n, f.dim, f.labels, 30, 0, 10);
  for (auto _ : state) {
    auto nn = probe.nearest(f.query, 30);
    benchmark::DoNotOptimize(nn.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

}  // namespace

BENCHMARK(BM_knn_classify)->Args({1000, 16})->Args({5000, 128})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_knn_topk)->Arg(1000)->Arg(5000)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
