#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace predepth {

enum class SelfMode { include, exclude };

struct VoteResult {
  std::int32_t predicted = -1;
  std::vector<double> fractions;  // per class, sums to 1
};

// Exact k-NN classifier over one layer's reference embeddings. Distance is
// squared Euclidean accumulated in double over dimensions in index order.
// Distance ties break toward the smaller reference index; vote ties break
// toward the smallest class index.
class ProbeIndex {
 public:
  ProbeIndex(std::span<const float> embeddings, std::int64_t n, int dim,
             std::span<const std::int32_t> labels, int k, int layer,
             int num_classes = 0);

  VoteResult classify(std::span<const float> query, std::int64_t exclude_index = -1) const;

  // The sorted (distance, index) list of the k_req nearest references,
  // usable to derive votes for any k <= k_req.
  std::vector<std::pair<double, std::int64_t>> nearest(std::span<const float> query,
                                                       int k_req,
                                                       std::int64_t exclude_index = -1) const;

  VoteResult vote_from_neighbors(
      std::span<const std::pair<double, std::int64_t>> neighbors, int k) const;

  std::int64_t size() const { return n_; }
  int dim() const { return dim_; }
  int k() const { return k_; }
  int layer() const { return layer_; }
  int num_classes() const { return num_classes_; }
  std::int32_t label(std::int64_t i) const { return labels_[i]; }

 private:
  void all_distances(std::span<const float> query, std::vector<double>& out) const;

  std::vector<float> transposed_;  // dimension-major reference embeddings
  std::vector<std::int32_t> labels_;
  std::int64_t n_;
  int dim_;
  int k_;
  int layer_;
  int num_classes_;
};

constexpr int kDefaultProbeK = 30;

ProbeIndex build_probe(std::span<const float> embeddings, std::int64_t n, int dim,
                       std::span<const std::int32_t> labels, int k = kDefaultProbeK,
                       int layer = 0, int num_classes = 0);

// Fraction of eval points classified as their label. When self_index is
// non-empty, self_index[i] names the reference row backing eval row i (-1
// when none); it is honored only in exclude mode.
double probe_accuracy(const ProbeIndex& probe, std::span<const float> eval_embeddings,
                      std::int64_t n_eval, std::span<const std::int32_t> eval_labels,
                      SelfMode self_mode = SelfMode::include,
                      std::span<const std::int32_t> self_index = {}, int jobs = 1);

}  // namespace predepth
