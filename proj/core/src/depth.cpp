#include "predepth/depth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace predepth {

int suffix_agreement_start(std::span<const std::int32_t> seq, std::int32_t target) {
  if (seq.empty()) throw std::invalid_argument("suffix_agreement: empty sequence");
  if (seq.back() != target) return -1;
  int start = static_cast<int>(seq.size()) - 1;
  while (start > 0 && seq[start - 1] == target) --start;
  return start;
}

DepthResult prediction_depth(std::span<const std::int32_t> probe_predictions,
                             std::int32_t final_prediction) {
  DepthResult r;
  r.final_prediction = final_prediction;
  int start = suffix_agreement_start(probe_predictions, final_prediction);
  if (start < 0) return r;  // softmax probe disagrees: no depth assigned
  r.defined = true;
  r.depth = start;
  return r;
}

std::int64_t iteration_learned(std::span<const std::int64_t> checkpoint_steps,
                               std::span<const std::int32_t> checkpoint_predictions,
                               std::int32_t final_prediction) {
  if (checkpoint_steps.size() != checkpoint_predictions.size())
    throw std::invalid_argument("iteration_learned: shape mismatch");
  int start = suffix_agreement_start(checkpoint_predictions, final_prediction);
  if (start < 0)
    throw std::invalid_argument(
        "iteration_learned: last checkpoint disagrees with final prediction");
  return start == 0 ? 0 : checkpoint_steps[start];
}

double percentile_linear(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile: empty input");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

std::vector<double> rescale_iterations(std::span<const double> taus) {
  if (taus.empty()) throw std::invalid_argument("rescale_iterations: empty input");
  for (double t : taus)
    if (t < 0.0) throw std::invalid_argument("rescale_iterations: negative tau");
  const double p95 = percentile_linear({taus.begin(), taus.end()}, 0.95);
  std::vector<double> out(taus.size(), 0.0);
  if (p95 == 0.0) return out;
  for (std::size_t i = 0; i < taus.size(); ++i) out[i] = taus[i] / p95;
  return out;
}

std::vector<std::vector<CurveCell>> inference_learning_curve(
    const std::vector<std::vector<std::int32_t>>& preds_per_probe,
    std::span<const Partition> partitions) {
  if (preds_per_probe.empty())
    throw std::invalid_argument("inference_learning_curve: no probes");
  std::vector<std::vector<CurveCell>> table(preds_per_probe.size());
  for (std::size_t l = 0; l < preds_per_probe.size(); ++l) {
    table[l].resize(partitions.size());
    const auto& preds = preds_per_probe[l];
    for (std::size_t p = 0; p < partitions.size(); ++p) {
      const auto& part = partitions[p];
      CurveCell& cell = table[l][p];
      cell.count = static_cast<std::int64_t>(part.indices.size());
      if (part.indices.empty()) continue;  // flagged undefined, not zero
      std::int64_t hits = 0;
      for (std::int32_t i : part.indices)
        hits += preds[i] == (*part.labels)[i] ? 1 : 0;
      cell.defined = true;
      cell.accuracy = static_cast<double>(hits) / static_cast<double>(part.indices.size());
    }
  }
  return table;
}

}  // namespace predepth
