#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace predepth {

// Earliest position from which every element of seq equals target; -1 when
// the last element differs from target. Shared by prediction depth (layer
// axis) and iteration learned (time axis).
int suffix_agreement_start(std::span<const std::int32_t> seq, std::int32_t target);

struct DepthResult {
  bool defined = false;
  int depth = -1;  // in [0, L] when defined
  std::int32_t final_prediction = -1;
};

// probe_predictions runs over probes 0..L; undefined when the softmax probe
// disagrees with the network's final prediction.
DepthResult prediction_depth(std::span<const std::int32_t> probe_predictions,
                             std::int32_t final_prediction);

// Earliest checkpoint step from which all subsequent predictions equal the
// final prediction; 0 when every checkpoint (including initialization)
// agrees. Throws if the last checkpoint disagrees with final_prediction.
std::int64_t iteration_learned(std::span<const std::int64_t> checkpoint_steps,
                               std::span<const std::int32_t> checkpoint_predictions,
                               std::int32_t final_prediction);

// Linear-interpolation percentile over order statistics: rank q*(m-1) with
// fractional interpolation, numpy's "linear" method.
double percentile_linear(std::vector<double> values, double q);

// v -> v / p95 over one model's taus; everything maps to 0 when p95 == 0.
std::vector<double> rescale_iterations(std::span<const double> taus);

struct Partition {
  std::string name;
  std::vector<std::int32_t> indices;
  const std::vector<std::int32_t>* labels;  // label array the partition is scored against
};

struct CurveCell {
  bool defined = false;
  double accuracy = 0.0;
  std::int64_t count = 0;
};

// preds_per_probe[l][i] is probe l's prediction for dataset row i; the
// result is a [probes x partitions] accuracy table. Empty partitions yield
// flagged (undefined) cells.
std::vector<std::vector<CurveCell>> inference_learning_curve(
    const std::vector<std::vector<std::int32_t>>& preds_per_probe,
    std::span<const Partition> partitions);

}  // namespace predepth
