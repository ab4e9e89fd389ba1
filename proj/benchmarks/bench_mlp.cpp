#include <benchmark/benchmark.h>

#include <vector>

#include "predepth/dataset.hpp"
#include "predepth/mlp.hpp"

namespace {

void BM_forward(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  auto m = predepth::init_model({16, width, width, width, width, 10}, 7);
  std::vector<float> x(16, 0.5f);
  predepth::Workspace<float> ws;
  ws.resize(m);
  for (auto _ : state) {
    predepth::forward(m, std::span<const float>(x), ws);
    benchmark::DoNotOptimize(ws.pre.back().data());
  }
}

void BM_sgd_step(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  auto ds = predepth::gaussian_blobs(10, 64, 16, 3.0, 1.0, 11);
  auto m = predepth::init_model({16, 128, 128, 128, 128, 10}, 7);
  std::vector<float> xs(static_cast<std::size_t>(batch) * 16);
  std::vector<std::int32_t> ys(static_cast<std::size_t>(batch));
  for (int i = 0; i < batch; ++i) {
    auto row = ds.row(i % ds.n);
    std::copy(row.begin(), row.end(), xs.begin() + static_cast<std::int64_t>(i) * 16);
    ys[i] = ds.labels[i % ds.n];
  }
  predepth::Gradients grads;
  grads.resize_like(m);
  for (auto _ : state) {
    grads.clear();
    double loss = predepth::backward_batch(m, xs.data(), batch, 16, ys.data(),
                                           predepth::Loss::cross_entropy, grads);
    benchmark::DoNotOptimize(loss);
  }
  state.SetItemsProcessed(state.iterations() * batch);
}

}  // namespace

BENCHMARK(BM_forward)->Arg(64)->Arg(128);
BENCHMARK(BM_sgd_step)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);
