#include "predepth/knn.hpp"

#include <algorithm>
#include <stdexcept>

#include "predepth/parallel.hpp"

namespace predepth {

ProbeIndex::ProbeIndex(std::span<const float> embeddings, std::int64_t n, int dim,
                       std::span<const std::int32_t> labels, int k, int layer,
                       int num_classes)
    : labels_(labels.begin(), labels.end()),
      n_(n),
      dim_(dim),
      k_(k),
      layer_(layer) {
  if (n < 1 || dim < 1) throw std::invalid_argument("build_probe: empty index");
  if (static_cast<std::int64_t>(embeddings.size()) != n * dim)
    throw std::invalid_argument("build_probe: embedding shape mismatch");
  if (static_cast<std::int64_t>(labels.size()) != n)
    throw std::invalid_argument("build_probe: label count mismatch");
  if (k < 1 || k > n) throw std::invalid_argument("build_probe: need 1 <= k <= n");
  std::int32_t max_label = 0;
  for (std::int32_t y : labels_) {
    if (y < 0) throw std::invalid_argument("build_probe: negative label");
    max_label = std::max(max_label, y);
  }
  num_classes_ = num_classes > 0 ? num_classes : max_label + 1;
  if (max_label >= num_classes_)
    throw std::invalid_argument("build_probe: label exceeds num_classes");

  // Dimension-major copy so the distance scan walks references contiguously.
  transposed_.resize(embeddings.size());
  for (std::int64_t i = 0; i < n_; ++i)
    for (int d = 0; d < dim_; ++d)
      transposed_[static_cast<std::size_t>(d) * n_ + i] = embeddings[i * dim_ + d];
}

ProbeIndex build_probe(std::span<const float> embeddings, std::int64_t n, int dim,
                       std::span<const std::int32_t> labels, int k, int layer,
                       int num_classes) {
  return ProbeIndex(embeddings, n, dim, labels, k, layer, num_classes);
}

namespace {

// (distance, index) ordering used everywhere: nearer first, index breaks ties.
inline bool closer(const std::pair<double, std::int64_t>& a,
                   const std::pair<double, std::int64_t>& b) {
  return a.first != b.first ? a.first < b.first : a.second < b.second;
}

}  // namespace

// Squared Euclidean distance, accumulated per reference in dimension index
// order in double precision. The blocked scan below keeps exactly that
// order for every reference; blocking only interleaves distinct references.
void ProbeIndex::all_distances(std::span<const float> query,
                               std::vector<double>& out) const {
  out.assign(static_cast<std::size_t>(n_), 0.0);
  double* __restrict acc = out.data();
  for (int d = 0; d < dim_; ++d) {
    const double qd = static_cast<double>(query[d]);
    const float* __restrict col = transposed_.data() + static_cast<std::size_t>(d) * n_;
    for (std::int64_t i = 0; i < n_; ++i) {
      const double diff = qd - static_cast<double>(col[i]);
      acc[i] += diff * diff;
    }
  }
}

std::vector<std::pair<double, std::int64_t>> ProbeIndex::nearest(
    std::span<const float> query, int k_req, std::int64_t exclude_index) const {
  if (static_cast<int>(query.size()) != dim_)
    throw std::invalid_argument("classify: query dimension mismatch");
  if (exclude_index >= n_)
    throw std::invalid_argument("classify: exclude_index out of range");
  const std::int64_t avail = n_ - (exclude_index >= 0 ? 1 : 0);
  if (k_req < 1 || k_req > avail)
    throw std::invalid_argument("classify: k exceeds available references");

  thread_local std::vector<double> dist;
  all_distances(query, dist);

  // Max-heap of the current k best; the root is the worst kept candidate.
  std::vector<std::pair<double, std::int64_t>> heap;
  heap.reserve(static_cast<std::size_t>(k_req) + 1);
  for (std::int64_t i = 0; i < n_; ++i) {
    if (i == exclude_index) continue;
    std::pair<double, std::int64_t> cand{dist[i], i};
    if (static_cast<int>(heap.size()) < k_req) {
      heap.push_back(cand);
      std::push_heap(heap.begin(), heap.end(), closer);
    } else if (closer(cand, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), closer);
      heap.back() = cand;
      std::push_heap(heap.begin(), heap.end(), closer);
    }
  }
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

VoteResult ProbeIndex::vote_from_neighbors(
    std::span<const std::pair<double, std::int64_t>> neighbors, int k) const {
  VoteResult r;
  r.fractions.assign(static_cast<std::size_t>(num_classes_), 0.0);
  std::vector<int> counts(static_cast<std::size_t>(num_classes_), 0);
  for (int i = 0; i < k; ++i) ++counts[labels_[neighbors[i].second]];
  int best = 0;
  for (int c = 1; c < num_classes_; ++c)
    if (counts[c] > counts[best]) best = c;
  r.predicted = best;
  const double inv = 1.0 / static_cast<double>(k);
  for (int c = 0; c < num_classes_; ++c) r.fractions[c] = counts[c] * inv;
  return r;
}

VoteResult ProbeIndex::classify(std::span<const float> query,
                                std::int64_t exclude_index) const {
  auto nn = nearest(query, k_, exclude_index);
  return vote_from_neighbors(nn, k_);
}

double probe_accuracy(const ProbeIndex& probe, std::span<const float> eval_embeddings,
                      std::int64_t n_eval, std::span<const std::int32_t> eval_labels,
                      SelfMode self_mode, std::span<const std::int32_t> self_index,
                      int jobs) {
  if (n_eval < 1) throw std::invalid_argument("probe_accuracy: empty eval set");
  if (static_cast<std::int64_t>(eval_embeddings.size()) != n_eval * probe.dim())
    throw std::invalid_argument("probe_accuracy: embedding shape mismatch");
  if (static_cast<std::int64_t>(eval_labels.size()) != n_eval)
    throw std::invalid_argument("probe_accuracy: label count mismatch");
  if (!self_index.empty() && static_cast<std::int64_t>(self_index.size()) != n_eval)
    throw std::invalid_argument("probe_accuracy: self_index shape mismatch");

  std::vector<std::uint8_t> correct(static_cast<std::size_t>(n_eval), 0);
  parallel_for(n_eval, jobs, [&](std::int64_t i) {
    std::int64_t exclude = -1;
    if (self_mode == SelfMode::exclude && !self_index.empty() && self_index[i] >= 0)
      exclude = self_index[i];
    auto v = probe.classify(
        {eval_embeddings.data() + i * probe.dim(), static_cast<std::size_t>(probe.dim())},
        exclude);
    correct[i] = v.predicted == eval_labels[i] ? 1 : 0;
  });
  std::int64_t hits = 0;
  for (std::uint8_t c : correct) hits += c;
  return static_cast<double>(hits) / static_cast<double>(n_eval);
}

}  // namespace predepth
