#include "predepth/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace predepth {

const char* corner_name(Corner c) {
  switch (c) {
    case Corner::easy: return "easy";
    case Corner::looks_like_other: return "looks_like_other";
    case Corner::ambiguous_unless_label: return "ambiguous_unless_label";
    case Corner::ambiguous: return "ambiguous";
  }
  return "?";
}

bool corner_from_name(const std::string& name, Corner& out) {
  for (Corner c : {Corner::easy, Corner::looks_like_other,
                   Corner::ambiguous_unless_label, Corner::ambiguous}) {
    if (name == corner_name(c)) {
      out = c;
      return true;
    }
  }
  return false;
}

double consistency_score(std::span<const std::int32_t> predictions, std::int32_t truth) {
  if (predictions.empty())
    throw std::invalid_argument("consistency_score: no occurrences");
  std::int64_t hits = 0;
  for (std::int32_t p : predictions) hits += p == truth ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

std::int32_t consensus_class(std::span<const std::int32_t> predictions,
                             std::int32_t truth, int num_classes) {
  if (predictions.empty()) throw std::invalid_argument("consensus_class: no occurrences");
  std::vector<std::int64_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (std::int32_t p : predictions) {
    if (p < 0 || p >= num_classes)
      throw std::invalid_argument("consensus_class: prediction out of range");
    ++counts[p];
  }
  std::int64_t best = *std::max_element(counts.begin(), counts.end());
  if (truth >= 0 && truth < num_classes && counts[truth] == best) return truth;
  for (int c = 0; c < num_classes; ++c)
    if (counts[c] == best) return c;
  return -1;  // unreachable
}

double consensus_consistency(std::span<const std::int32_t> predictions,
                             std::int32_t consensus) {
  if (predictions.empty())
    throw std::invalid_argument("consensus_consistency: no occurrences");
  std::int64_t hits = 0;
  for (std::int32_t p : predictions) hits += p == consensus ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double prediction_entropy(std::span<const std::int32_t> predictions, int num_classes) {
  if (predictions.empty())
    throw std::invalid_argument("prediction_entropy: no occurrences");
  std::vector<std::int64_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (std::int32_t p : predictions) ++counts[p];
  const double n = static_cast<double>(predictions.size());
  double s = 0.0;
  for (std::int64_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    s -= p * std::log(p);
  }
  return s;
}

namespace {

// Ranks with ties averaged.
std::vector<double> average_ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

struct PearsonParts {
  bool defined;
  double r;
};

PearsonParts pearson(std::span<const double> xs, std::span<const double> ys) {
  // A constant vector has zero variance by definition; detect it exactly
  // rather than through a rounded sum of squares.
  bool x_const = true, y_const = true;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    x_const = x_const && xs[i] == xs[0];
    y_const = y_const && ys[i] == ys[0];
  }
  if (x_const || y_const) return {false, 0.0};

  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return {false, 0.0};
  return {true, sxy / std::sqrt(sxx * syy)};
}

}  // namespace

SpearmanResult spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("spearman: length mismatch");
  if (xs.size() < 2) throw std::invalid_argument("spearman: need at least 2 pairs");
  auto rx = average_ranks(xs);
  auto ry = average_ranks(ys);
  auto p = pearson(rx, ry);
  return {p.defined, p.r};
}

PearsonLogResult pearson_log(std::span<const double> xs, std::span<const double> margins) {
  if (xs.size() != margins.size())
    throw std::invalid_argument("pearson_log: length mismatch");
  PearsonLogResult out;
  std::vector<double> fx, fy;
  fx.reserve(xs.size());
  fy.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(margins[i] > 0.0) || !std::isfinite(margins[i])) {
      ++out.excluded;
      continue;
    }
    fx.push_back(xs[i]);
    fy.push_back(std::log(margins[i]));
  }
  if (fx.size() < 2)
    throw std::invalid_argument("pearson_log: fewer than 2 surviving pairs");
  auto p = pearson(fx, fy);
  out.defined = p.defined;
  out.r = p.r;
  return out;
}

std::vector<DifficultyProfile> build_profiles(const EnsembleTable& table) {
  const double L = static_cast<double>(table.max_depth);
  std::vector<DifficultyProfile> out(table.rows.size());
  for (std::size_t id = 0; id < table.rows.size(); ++id) {
    DifficultyProfile& p = out[id];
    p.id = static_cast<std::int64_t>(id);
    p.truth = table.truth[id];

    std::vector<std::int32_t> val_preds;
    double pd_val_sum = 0, pd_train_sum = 0, tau_sum = 0;
    std::int64_t pd_val_n = 0, pd_train_n = 0, tau_n = 0;
    for (const Occurrence& o : table.rows[id]) {
      if (o.was_val) {
        ++p.val_occurrences;
        val_preds.push_back(o.pred);
        tau_sum += o.tau_rescaled;
        ++tau_n;
        if (o.depth_defined) {
          pd_val_sum += o.depth;
          ++pd_val_n;
        }
      } else {
        ++p.train_occurrences;
        if (o.depth_defined) {
          pd_train_sum += o.depth;
          ++pd_train_n;
        }
      }
    }
    if (!val_preds.empty()) {
      p.ensemble_defined = true;
      p.c_hat = consistency_score(val_preds, p.truth);
      p.consensus = consensus_class(val_preds, p.truth, table.num_classes);
      p.c_star = consensus_consistency(val_preds, p.consensus);
      p.entropy = prediction_entropy(val_preds, table.num_classes);
    }
    if (pd_val_n > 0) {
      p.pd_val_defined = true;
      p.mean_pd_val = pd_val_sum / static_cast<double>(pd_val_n);
    }
    if (pd_train_n > 0) {
      p.pd_train_defined = true;
      p.mean_pd_train = pd_train_sum / static_cast<double>(pd_train_n);
    }
    if (tau_n > 0) {
      p.tau_defined = true;
      p.mean_tau = tau_sum / static_cast<double>(tau_n);
    }
    if (p.pd_val_defined && p.pd_train_defined && L > 0) {
      p.corner_defined = true;
      const double x = p.mean_pd_val / L;
      const double y = p.mean_pd_train / L;
      const double cx[4] = {0, 0, 1, 1};
      const double cy[4] = {0, 1, 0, 1};
      int best = 0;
      for (int c = 0; c < 4; ++c) {
        p.corner_distance[c] = std::hypot(x - cx[c], y - cy[c]);
        if (p.corner_distance[c] < p.corner_distance[best]) best = c;
      }
      p.corner = static_cast<Corner>(best);
    }
  }
  return out;
}

std::vector<CornerPick> corner_examples(std::span<const DifficultyProfile> profiles,
                                        Corner corner, int count) {
  if (count < 0) throw std::invalid_argument("corner_examples: negative count");
  std::vector<CornerPick> picks;
  for (const auto& p : profiles) {
    if (!p.corner_defined) continue;
    picks.push_back({p.id, p.corner_distance[static_cast<int>(corner)]});
  }
  std::sort(picks.begin(), picks.end(), [](const CornerPick& a, const CornerPick& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  });
  if (static_cast<std::size_t>(count) < picks.size())
    picks.resize(static_cast<std::size_t>(count));  // truncation is the caller's warning
  return picks;
}

OverrideEval midlayer_override_eval(const MlpModel& model, const ProbeIndex& probe,
                                    const EmbeddingTrace& trace, const Dataset& ds,
                                    std::span<const std::int64_t> ids) {
  if (ids.empty()) throw std::invalid_argument("midlayer_override_eval: empty id set");
  const int layer = probe.layer();
  if (layer <= 0 || layer >= trace.probe_count() - 1)
    throw std::invalid_argument("midlayer_override_eval: probe layer must be interior");
  OverrideEval r;
  r.count = static_cast<std::int64_t>(ids.size());
  Workspace<float> ws;
  ws.resize(model);
  for (std::int64_t id : ids) {
    forward(model, ds.row(id), ws);
    const int model_pred = argmax_lowest(std::span<const float>(ws.pre.back()));
    auto v = probe.classify(trace.at(layer, id));
    r.model_accuracy += model_pred == ds.labels[id] ? 1.0 : 0.0;
    r.probe_accuracy += v.predicted == ds.labels[id] ? 1.0 : 0.0;
  }
  r.model_accuracy /= static_cast<double>(ids.size());
  r.probe_accuracy /= static_cast<double>(ids.size());
  return r;
}

BucketTrend bucket_trend(std::span<const double> xs, std::span<const double> ys,
                         int min_count) {
  if (xs.size() != ys.size()) throw std::invalid_argument("bucket_trend: length mismatch");
  struct Acc {
    std::int64_t n = 0;
    double sum = 0;
  };
  std::vector<std::pair<int, Acc>> groups;
  auto slot = [&](int b) -> Acc& {
    for (auto& g : groups)
      if (g.first == b) return g.second;
    groups.push_back({b, Acc{}});
    return groups.back().second;
  };
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const int b = static_cast<int>(std::floor(xs[i] + 0.5));
    Acc& a = slot(b);
    ++a.n;
    a.sum += ys[i];
  }
  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  BucketTrend t;
  for (const auto& [b, acc] : groups) {
    if (acc.n < min_count) continue;
    t.bucket.push_back(b);
    t.count.push_back(acc.n);
    t.mean.push_back(acc.sum / static_cast<double>(acc.n));
  }
  if (t.bucket.size() < 2)
    throw std::invalid_argument("bucket_trend: fewer than 2 surviving buckets");
  std::vector<double> bx(t.bucket.begin(), t.bucket.end());
  t.rank_corr = spearman(bx, t.mean);
  return t;
}

}  // namespace predepth
