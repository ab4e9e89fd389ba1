#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "predepth/ensemble.hpp"
#include "predepth/prng.hpp"

using namespace predepth;

namespace {

// Hand-enumeration oracles, deliberately written differently from the
// library (maps and explicit scans instead of vote vectors).
double oracle_consistency(const std::vector<std::int32_t>& preds, std::int32_t truth) {
  int hits = 0;
  for (auto p : preds) hits += p == truth;
  return double(hits) / double(preds.size());
}

std::int32_t oracle_consensus(const std::vector<std::int32_t>& preds, std::int32_t truth) {
  std::map<std::int32_t, int> counts;
  for (auto p : preds) counts[p]++;
  int best = 0;
  for (auto& [cls, n] : counts) best = std::max(best, n);
  if (counts.count(truth) && counts[truth] == best) return truth;
  for (auto& [cls, n] : counts)
    if (n == best) return cls;  // std::map iterates ascending: lowest index
  return -1;
}

double oracle_entropy(const std::vector<std::int32_t>& preds) {
  std::map<std::int32_t, int> counts;
  for (auto p : preds) counts[p]++;
  double s = 0;
  for (auto& [cls, n] : counts) {
    double p = double(n) / double(preds.size());
    s -= p * std::log(p);
  }
  return s;
}

}  // namespace

TEST_CASE("consistency_score: pinned cases") {
  std::vector<std::int32_t> preds = {2, 2, 0};
  CHECK(consistency_score(preds, 2) == doctest::Approx(2.0 / 3).epsilon(1e-15));
  std::vector<std::int32_t> all = {1, 1, 1, 1};
  CHECK(consistency_score(all, 1) == 1.0);
  CHECK(consistency_score(all, 0) == 0.0);
  CHECK_THROWS_AS(consistency_score({}, 0), std::invalid_argument);
}

TEST_CASE("consensus_class: both tiebreak branches") {
  // votes {A:2, B:2}, truth B -> B
  std::vector<std::int32_t> v1 = {0, 0, 1, 1};
  CHECK(consensus_class(v1, 1, 3) == 1);
  // votes {A:2, C:2}, truth B -> A (lowest index among tied classes)
  std::vector<std::int32_t> v2 = {0, 0, 2, 2};
  CHECK(consensus_class(v2, 1, 3) == 0);
  // strict majority
  std::vector<std::int32_t> v3 = {0, 0, 0, 1};
  CHECK(consensus_class(v3, 1, 2) == 0);
}

TEST_CASE("consensus_consistency: pinned cases and dominance over c_hat") {
  std::vector<std::int32_t> same = {3, 3, 3};
  CHECK(consensus_consistency(same, 3) == 1.0);
  std::vector<std::int32_t> v = {0, 0, 0, 1};
  CHECK(consensus_consistency(v, 0) == 0.75);

  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng.bounded(10));
    const int classes = 2 + static_cast<int>(rng.bounded(4));
    std::vector<std::int32_t> preds(static_cast<std::size_t>(n));
    for (auto& p : preds) p = static_cast<std::int32_t>(rng.bounded(classes));
    const std::int32_t truth = static_cast<std::int32_t>(rng.bounded(classes));
    const std::int32_t consensus = consensus_class(preds, truth, classes);
    const double c_hat = consistency_score(preds, truth);
    const double c_star = consensus_consistency(preds, consensus);
    CHECK(c_star >= c_hat);
    // equality exactly when the consensus equals the ground truth
    if (consensus == truth)
      CHECK(c_star == c_hat);
    else
      CHECK(c_star > c_hat);
    // entropy relations
    const double s = prediction_entropy(preds, classes);
    CHECK(s <= std::log(double(classes)) + 1e-12);
    if (c_star == 1.0)
      CHECK(s == 0.0);
    else
      CHECK(s > 0.0);
  }
}

TEST_CASE("prediction_entropy: pinned values") {
  std::vector<std::int32_t> same = {2, 2, 2, 2};
  CHECK(prediction_entropy(same, 5) == 0.0);
  std::vector<std::int32_t> half = {0, 1, 0, 1};
  CHECK(prediction_entropy(half, 2) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(prediction_entropy(half, 2) == doctest::Approx(0.6931).epsilon(1e-4));
  std::vector<std::int32_t> uniform = {0, 1, 2, 3, 4};
  CHECK(prediction_entropy(uniform, 5) == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("consensus is invariant to model order") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.bounded(12));
    const int classes = 2 + static_cast<int>(rng.bounded(5));
    std::vector<std::int32_t> preds(static_cast<std::size_t>(n));
    for (auto& p : preds) p = static_cast<std::int32_t>(rng.bounded(classes));
    const std::int32_t truth = static_cast<std::int32_t>(rng.bounded(classes));
    std::vector<std::int32_t> shuffled = preds;
    rng.shuffle(shuffled);
    CHECK(consensus_class(preds, truth, classes) ==
          consensus_class(shuffled, truth, classes));
  }
}

TEST_CASE("estimators equal the hand enumeration on small ensembles") {
  Rng rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng.bounded(10));
    const int classes = 2 + static_cast<int>(rng.bounded(6));
    std::vector<std::int32_t> preds(static_cast<std::size_t>(n));
    for (auto& p : preds) p = static_cast<std::int32_t>(rng.bounded(classes));
    const std::int32_t truth = static_cast<std::int32_t>(rng.bounded(classes));
    CHECK(consistency_score(preds, truth) == oracle_consistency(preds, truth));
    CHECK(consensus_class(preds, truth, classes) == oracle_consensus(preds, truth));
    CHECK(prediction_entropy(preds, classes) ==
          doctest::Approx(oracle_entropy(preds)).epsilon(1e-12));
  }
}

TEST_CASE("spearman: pinned and tied cases") {
  std::vector<double> xs = {1, 2, 3, 4};
  std::vector<double> inc = {10, 20, 25, 80};
  CHECK(spearman(xs, inc).rho == doctest::Approx(1.0));
  std::vector<double> dec = {5, 4, 3, 1};
  CHECK(spearman(xs, dec).rho == doctest::Approx(-1.0));
  std::vector<double> ys = {2, 1, 4, 3};
  auto r = spearman(xs, ys);
  CHECK(r.defined);
  CHECK(r.rho == doctest::Approx(0.6).epsilon(1e-12));
  std::vector<double> flat = {7, 7, 7, 7};
  CHECK(!spearman(xs, flat).defined);
  CHECK_THROWS_AS(spearman({}, {}), std::invalid_argument);

  // average ranks for ties: {1,1,2} ranks to {1.5,1.5,3}
  std::vector<double> tx = {1, 1, 2};
  std::vector<double> ty = {0, 0, 5};
  CHECK(spearman(tx, ty).rho == doctest::Approx(1.0));
}

TEST_CASE("pearson_log: exact inverse exponential and exclusions") {
  Rng rng(11);
  std::vector<double> xs(30), margins(30);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = rng.uniform(0, 5);
    margins[i] = std::exp(-xs[i]);
  }
  auto r = pearson_log(xs, margins);
  CHECK(r.defined);
  CHECK(r.r == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(r.excluded == 0);

  std::vector<double> flat(30, 2.5);
  CHECK(!pearson_log(xs, flat).defined);

  margins[3] = 0.0;
  margins[7] = -1.0;
  auto r2 = pearson_log(xs, margins);
  CHECK(r2.excluded == 2);

  std::vector<double> two = {1, 2};
  std::vector<double> bad = {0.0, 1.0};
  CHECK_THROWS_AS(pearson_log(two, bad), std::invalid_argument);
}

TEST_CASE("pearson_log matches a direct-formula oracle") {
  Rng rng(13);
  std::vector<double> xs(50), margins(50);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = rng.next_gaussian();
    margins[i] = std::exp(rng.next_gaussian());
  }
  auto r = pearson_log(xs, margins);
  // direct two-pass formula
  std::vector<double> ly(50);
  for (std::size_t i = 0; i < 50; ++i) ly[i] = std::log(margins[i]);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    mx += xs[i];
    my += ly[i];
  }
  mx /= 50;
  my /= 50;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    sxy += (xs[i] - mx) * (ly[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  CHECK(r.r == doctest::Approx(sxy / std::sqrt(sxx * syy)).epsilon(1e-12));
}

namespace {

std::vector<DifficultyProfile> corner_fixture(int max_depth) {
  // handcrafted (pd_val, pd_train) spread plus an undefined profile
  std::vector<std::pair<double, double>> pts = {
      {0.0, 0.0}, {0.2, 4.8}, {4.9, 0.1}, {5.0, 5.0}, {2.5, 2.5},
      {1.0, 0.5}, {0.4, 4.0}, {4.0, 0.8}, {4.5, 4.4}, {0.9, 1.1}};
  std::vector<DifficultyProfile> profiles;
  EnsembleTable t;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    DifficultyProfile p;
    p.id = static_cast<std::int64_t>(i);
    p.pd_val_defined = p.pd_train_defined = true;
    p.mean_pd_val = pts[i].first;
    p.mean_pd_train = pts[i].second;
    p.corner_defined = true;
    const double x = p.mean_pd_val / max_depth;
    const double y = p.mean_pd_train / max_depth;
    const double cx[4] = {0, 0, 1, 1}, cy[4] = {0, 1, 0, 1};
    int best = 0;
    for (int c = 0; c < 4; ++c) {
      p.corner_distance[c] = std::hypot(x - cx[c], y - cy[c]);
      if (p.corner_distance[c] < p.corner_distance[best]) best = c;
    }
    p.corner = static_cast<Corner>(best);
    profiles.push_back(p);
  }
  DifficultyProfile undef;
  undef.id = 99;
  profiles.push_back(undef);
  return profiles;
}

}  // namespace

TEST_CASE("corner_examples: pinned distances and brute-force ordering") {
  auto profiles = corner_fixture(5);
  auto easy = corner_examples(profiles, Corner::easy, 3);
  CHECK(easy[0].id == 0);
  CHECK(easy[0].distance == 0.0);
  auto llo = corner_examples(profiles, Corner::looks_like_other, 1);
  // (0.2, 4.8)/5 is nearest to the (0,1) corner
  CHECK(llo[0].id == 1);
  auto aul = corner_examples(profiles, Corner::ambiguous_unless_label, 1);
  CHECK(aul[0].id == 2);
  auto amb = corner_examples(profiles, Corner::ambiguous, 1);
  CHECK(amb[0].id == 3);

  // ranking equals a brute-force sort for every corner
  for (Corner c : {Corner::easy, Corner::looks_like_other,
                   Corner::ambiguous_unless_label, Corner::ambiguous}) {
    auto picks = corner_examples(profiles, c, 100);  // count beyond available
    CHECK(picks.size() == 10);                       // truncated to defined profiles
    std::vector<std::pair<double, std::int64_t>> brute;
    for (const auto& p : profiles) {
      if (!p.corner_defined) continue;
      brute.push_back({p.corner_distance[static_cast<int>(c)], p.id});
    }
    std::sort(brute.begin(), brute.end());
    for (std::size_t i = 0; i < picks.size(); ++i) {
      CHECK(picks[i].id == brute[i].second);
      CHECK(picks[i].distance == brute[i].first);
    }
  }

  // each profile's minimal-distance corner agrees with a brute-force
  // classification over the unit square
  for (const auto& p : profiles) {
    if (!p.corner_defined) continue;
    int best = 0;
    for (int c = 0; c < 4; ++c)
      if (p.corner_distance[c] < p.corner_distance[best]) best = c;
    CHECK(static_cast<int>(p.corner) == best);
  }
}

TEST_CASE("bucket_trend: pinned, flagged and oracle cases") {
  Rng rng(17);
  std::vector<double> xs(200), ys(200);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = static_cast<double>(rng.bounded(5));
    ys[i] = -xs[i];
  }
  auto t = bucket_trend(xs, ys, 10);
  CHECK(t.rank_corr.defined);
  CHECK(t.rank_corr.rho == doctest::Approx(-1.0));

  // constant y: means equal, rank correlation flagged undefined
  std::vector<double> flat(200, 3.25);
  auto tf = bucket_trend(xs, flat, 10);
  CHECK(!tf.rank_corr.defined);

  // group-by oracle on random data
  std::vector<double> ys2(200);
  for (auto& y : ys2) y = rng.next_gaussian();
  auto tr = bucket_trend(xs, ys2, 1);
  for (std::size_t b = 0; b < tr.bucket.size(); ++b) {
    double sum = 0;
    std::int64_t n = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (static_cast<int>(std::floor(xs[i] + 0.5)) == tr.bucket[b]) {
        sum += ys2[i];
        ++n;
      }
    }
    CHECK(n == tr.count[b]);
    CHECK(tr.mean[b] == doctest::Approx(sum / n).epsilon(1e-12));
  }

  // fewer than 2 surviving buckets
  std::vector<double> one_bucket(30, 2.0), yy(30, 1.0);
  CHECK_THROWS_AS(bucket_trend(one_bucket, yy, 10), std::invalid_argument);
}

TEST_CASE("midlayer_override_eval: disjoint correctness fixture") {
  // Model with zero weights and output bias favoring class 1: it always
  // predicts 1. Truth labels make it right on exactly one of four examples.
  MlpModel m;
  m.widths = {2, 2, 2};
  m.weights = {std::vector<float>(4, 0.0f), std::vector<float>(4, 0.0f)};
  m.biases = {std::vector<float>(2, 0.0f), {0.0f, 1.0f}};

  Dataset ds;
  ds.n = 4;
  ds.d = 2;
  ds.num_classes = 2;
  ds.features = {0, 0, 1, 0, 2, 0, 3, 0};
  ds.labels = {1, 0, 0, 0};
  ds.original_labels = ds.labels;
  ds.noise_mask.assign(4, 0);

  EmbeddingTrace trace;
  trace.rows = 4;
  trace.dims = {2, 2, 2};
  trace.probes = {{0, 0, 1, 0, 2, 0, 3, 0},
                  {0, 0, 1, 0, 2, 0, 3, 0},
                  {0, 0, 1, 0, 2, 0, 3, 0}};

  // k=1 probe whose single reference carries label 0: probe is right on the
  // three class-0 points and wrong on the class-1 point.
  std::vector<float> refs = {0.5f, 0.0f};
  std::vector<std::int32_t> ref_labels = {0};
  auto probe = build_probe(refs, 1, 2, ref_labels, 1, 1, 2);

  std::vector<std::int64_t> ids = {0, 1, 2, 3};
  auto r = midlayer_override_eval(m, probe, trace, ds, ids);
  CHECK(r.model_accuracy == 0.25);
  CHECK(r.probe_accuracy == 0.75);

  // full agreement fixture
  std::vector<std::int32_t> ref1 = {1};
  auto probe1 = build_probe(refs, 1, 2, ref1, 1, 1, 2);
  std::vector<std::int64_t> first = {0};
  auto r1 = midlayer_override_eval(m, probe1, trace, ds, first);
  CHECK(r1.model_accuracy == 1.0);
  CHECK(r1.probe_accuracy == 1.0);

  CHECK_THROWS_AS(midlayer_override_eval(m, probe, trace, ds, {}), std::invalid_argument);
  auto probe_input = build_probe(refs, 1, 2, ref_labels, 1, 0, 2);
  CHECK_THROWS_AS(midlayer_override_eval(m, probe_input, trace, ds, ids),
                  std::invalid_argument);
}

TEST_CASE("build_profiles aggregates occurrences and flags undefined rows") {
  EnsembleTable t;
  t.num_classes = 3;
  t.max_depth = 5;
  t.truth = {1, 2};
  t.rows.resize(2);
  // example 0: two validation occurrences and one train occurrence
  t.rows[0].push_back({0, true, 1, true, 0, 10, 0.1});
  t.rows[0].push_back({1, false, 1, true, 2, 20, 0.2});
  t.rows[0].push_back({2, true, 0, true, 4, 30, 0.3});
  // example 1: train occurrences only
  t.rows[1].push_back({0, false, 2, true, 5, 40, 0.4});
  t.rows[1].push_back({1, false, 2, false, -1, 50, 0.5});
  t.rows[1].push_back({2, false, 2, true, 3, 60, 0.6});

  auto profiles = build_profiles(t);
  REQUIRE(profiles.size() == 2);
  const auto& p0 = profiles[0];
  CHECK(p0.ensemble_defined);
  CHECK(p0.val_occurrences == 2);
  CHECK(p0.c_hat == 0.5);
  CHECK(p0.consensus == 1);  // tie {1,0} contains the truth
  CHECK(p0.c_star == 0.5);
  CHECK(p0.mean_pd_val == doctest::Approx(2.0));   // (0+4)/2
  CHECK(p0.mean_pd_train == doctest::Approx(2.0));
  CHECK(p0.mean_tau == doctest::Approx(0.2));      // (0.1+0.3)/2 over val occurrences
  CHECK(p0.corner_defined);

  const auto& p1 = profiles[1];
  CHECK(!p1.ensemble_defined);
  CHECK(!p1.pd_val_defined);
  CHECK(p1.pd_train_defined);
  CHECK(p1.mean_pd_train == doctest::Approx(4.0));  // undefined occurrence excluded
  CHECK(!p1.corner_defined);
}
