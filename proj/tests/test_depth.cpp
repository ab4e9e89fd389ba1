#include <doctest.h>

#include <cmath>

#include "predepth/dataset.hpp"
#include "predepth/depth.hpp"
#include "predepth/knn.hpp"
#include "predepth/mlp.hpp"
#include "predepth/prng.hpp"

using namespace predepth;

TEST_CASE("prediction_depth: pinned cases") {
  const std::int32_t A = 0, B = 1;
  {
    std::vector<std::int32_t> probes = {B, B, B, B};
    auto r = prediction_depth(probes, B);
    CHECK(r.defined);
    CHECK(r.depth == 0);
  }
  {
    std::vector<std::int32_t> probes = {B, A, B, B};
    auto r = prediction_depth(probes, B);
    CHECK(r.defined);
    CHECK(r.depth == 2);
  }
  {
    std::vector<std::int32_t> probes = {A, A, A, B};
    auto r = prediction_depth(probes, A);
    CHECK(!r.defined);  // softmax probe disagrees: no depth assigned
  }
  CHECK_THROWS_AS(prediction_depth({}, 0), std::invalid_argument);
}

TEST_CASE("iteration_learned: pinned cases") {
  const std::int32_t A = 0, B = 1;
  {
    std::vector<std::int64_t> steps = {0, 10, 20};
    std::vector<std::int32_t> preds = {A, A, A};
    CHECK(iteration_learned(steps, preds, A) == 0);
  }
  {
    std::vector<std::int64_t> steps = {0, 10, 20, 30, 40};
    std::vector<std::int32_t> preds = {A, B, A, A, A};
    CHECK(iteration_learned(steps, preds, A) == 20);
  }
  {
    std::vector<std::int64_t> steps = {0, 10};
    std::vector<std::int32_t> preds = {A, B};
    CHECK_THROWS_AS(iteration_learned(steps, preds, A), std::invalid_argument);
  }
}

TEST_CASE("prediction depth and iteration learned share the suffix combinator") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int len = 1 + static_cast<int>(rng.bounded(12));
    std::vector<std::int32_t> seq(static_cast<std::size_t>(len));
    for (auto& s : seq) s = static_cast<std::int32_t>(rng.bounded(3));
    const std::int32_t target = static_cast<std::int32_t>(rng.bounded(3));

    std::vector<std::int64_t> steps(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) steps[i] = i;  // step value == index

    auto pd = prediction_depth(seq, target);
    if (pd.defined) {
      CHECK(iteration_learned(steps, seq, target) == pd.depth);
      // re-check the suffix invariant
      for (int l = pd.depth; l < len; ++l) CHECK(seq[l] == target);
      if (pd.depth > 0) CHECK(seq[pd.depth - 1] != target);
      CHECK(pd.depth <= len - 1);
    } else {
      CHECK_THROWS_AS(iteration_learned(steps, seq, target), std::invalid_argument);
    }
  }
}

TEST_CASE("rescale_iterations: degenerate and pinned cases") {
  {
    std::vector<double> taus(12, 0.0);
    auto r = rescale_iterations(taus);
    for (double v : r) CHECK(v == 0.0);
  }
  {
    // 19 zeros plus two copies of 100: the 95th percentile lands on 100
    std::vector<double> taus(19, 0.0);
    taus.push_back(100.0);
    taus.push_back(100.0);
    auto r = rescale_iterations(taus);
    CHECK(r[19] == 1.0);
    CHECK(r[20] == 1.0);
    CHECK(r[0] == 0.0);
  }
  CHECK_THROWS_AS(rescale_iterations({}), std::invalid_argument);
  std::vector<double> neg = {1.0, -2.0};
  CHECK_THROWS_AS(rescale_iterations(neg), std::invalid_argument);
}

TEST_CASE("percentile: linear interpolation spot check") {
  // {10,20,...,200}: rank 0.95*19 = 18.05 interpolates 190 and 200
  std::vector<double> taus;
  for (int i = 1; i <= 20; ++i) taus.push_back(10.0 * i);
  CHECK(percentile_linear(taus, 0.95) == doctest::Approx(190.5).epsilon(1e-12));
  auto r = rescale_iterations(taus);
  CHECK(r.back() == doctest::Approx(200.0 / 190.5).epsilon(1e-12));
}

TEST_CASE("rescale_iterations preserves order") {
  Rng rng(15);
  std::vector<double> taus(40);
  for (auto& t : taus) t = static_cast<double>(rng.bounded(500));
  auto r = rescale_iterations(taus);
  for (std::size_t i = 0; i < taus.size(); ++i)
    for (std::size_t j = 0; j < taus.size(); ++j)
      if (taus[i] < taus[j]) CHECK(r[i] <= r[j]);
}

TEST_CASE("inference_learning_curve: trivial and flagged cells") {
  // two probes, four points
  std::vector<std::vector<std::int32_t>> preds = {{0, 1, 0, 1}, {1, 1, 0, 0}};
  std::vector<std::int32_t> labels = {0, 1, 0, 1};
  std::vector<std::int32_t> originals = {1, 0, 1, 0};
  std::vector<Partition> parts;
  parts.push_back({"all", {0, 1, 2, 3}, &labels});
  parts.push_back({"vs_original", {0, 1, 2, 3}, &originals});
  parts.push_back({"empty", {}, &labels});
  auto table = inference_learning_curve(preds, parts);
  REQUIRE(table.size() == 2);
  CHECK(table[0][0].defined);
  CHECK(table[0][0].accuracy == 1.0);  // probe 0 matches labels everywhere
  CHECK(table[0][1].accuracy == 0.0);  // and the originals nowhere
  CHECK(table[1][0].accuracy == 0.5);
  CHECK(!table[0][2].defined);  // empty partition is flagged, not zero

  // labels and originals differ on every point: correctness is mutually
  // exclusive per point, so the two scores can never both exceed 0.5
  for (std::size_t l = 0; l < table.size(); ++l)
    CHECK(table[l][0].accuracy + table[l][1].accuracy <= 1.0);
}

TEST_CASE("untrained softmax probe sits at chance on signal-free data") {
  // identical class distributions: the labels carry no information
  Dataset ds = gaussian_blobs(2, 600, 6, 0.0, 1.0, 31);
  SplitSpec split = make_split(ds.n, 0.15, 32);
  MlpModel m = init_model({6, 32, 32, 2}, 33);
  EmbeddingTrace trace = capture_trace(m, ds);
  const int softmax_probe = trace.probe_count() - 1;

  std::vector<float> refs;
  std::vector<std::int32_t> ref_labels;
  for (auto i : split.train_indices) {
    auto row = trace.at(softmax_probe, i);
    refs.insert(refs.end(), row.begin(), row.end());
    ref_labels.push_back(ds.labels[i]);
  }
  auto probe = build_probe(refs, static_cast<std::int64_t>(ref_labels.size()),
                           trace.dims[softmax_probe], ref_labels, 30, softmax_probe, 2);
  std::vector<float> val;
  std::vector<std::int32_t> val_labels;
  for (auto i : split.val_indices) {
    auto row = trace.at(softmax_probe, i);
    val.insert(val.end(), row.begin(), row.end());
    val_labels.push_back(ds.labels[i]);
  }
  double acc = probe_accuracy(probe, val, static_cast<std::int64_t>(val_labels.size()),
                              val_labels);
  CHECK(acc > 0.45);
  CHECK(acc < 0.55);
}
