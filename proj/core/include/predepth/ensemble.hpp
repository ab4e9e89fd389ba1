#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "predepth/knn.hpp"
#include "predepth/mlp.hpp"

namespace predepth {

// One model's contribution to one example's row.
struct Occurrence {
  std::int32_t model = -1;
  bool was_val = false;
  std::int32_t pred = -1;
  bool depth_defined = false;
  int depth = -1;
  std::int64_t tau = 0;
  double tau_rescaled = 0.0;
};

struct EnsembleTable {
  int num_classes = 0;
  int max_depth = 0;  // L: number of probes minus one
  std::vector<std::int32_t> truth;           // dataset labels per example
  std::vector<std::vector<Occurrence>> rows; // per example, one entry per model
};

enum class Corner { easy = 0, looks_like_other = 1, ambiguous_unless_label = 2, ambiguous = 3 };

const char* corner_name(Corner c);
bool corner_from_name(const std::string& name, Corner& out);

struct DifficultyProfile {
  std::int64_t id = 0;
  std::int32_t truth = -1;
  std::int64_t val_occurrences = 0;
  std::int64_t train_occurrences = 0;

  bool ensemble_defined = false;  // at least one validation occurrence
  double c_hat = 0.0;
  std::int32_t consensus = -1;
  double c_star = 0.0;
  double entropy = 0.0;

  bool pd_val_defined = false;
  double mean_pd_val = 0.0;
  bool pd_train_defined = false;
  double mean_pd_train = 0.0;
  bool tau_defined = false;  // mean rescaled tau over validation occurrences
  double mean_tau = 0.0;

  bool corner_defined = false;
  std::array<double, 4> corner_distance{};
  Corner corner = Corner::easy;
};

// Eq.-style estimators over a prediction multiset. All are pure and throw on
// empty input.
double consistency_score(std::span<const std::int32_t> predictions, std::int32_t truth);
// Modal class; ties containing the ground truth resolve to it, otherwise to
// the lowest class index among the tied classes.
std::int32_t consensus_class(std::span<const std::int32_t> predictions,
                             std::int32_t truth, int num_classes);
double consensus_consistency(std::span<const std::int32_t> predictions,
                             std::int32_t consensus);
// Natural-log entropy of the one-hot prediction histogram, 0*ln 0 = 0.
double prediction_entropy(std::span<const std::int32_t> predictions, int num_classes);

struct SpearmanResult {
  bool defined = false;  // false on zero rank variance
  double rho = 0.0;
};
SpearmanResult spearman(std::span<const double> xs, std::span<const double> ys);

struct PearsonLogResult {
  bool defined = false;
  double r = 0.0;
  std::int64_t excluded = 0;  // non-positive margins dropped
};
PearsonLogResult pearson_log(std::span<const double> xs, std::span<const double> margins);

// Profiles aggregated across the ensemble; corner distances are computed in
// the (PD_val, PD_train)/L unit square.
std::vector<DifficultyProfile> build_profiles(const EnsembleTable& table);

struct CornerPick {
  std::int64_t id;
  double distance;
};
std::vector<CornerPick> corner_examples(std::span<const DifficultyProfile> profiles,
                                        Corner corner, int count);

struct OverrideEval {
  double model_accuracy = 0.0;
  double probe_accuracy = 0.0;
  std::int64_t count = 0;
};
// Accuracy of the model's argmax vs the probe's vote on exactly these ids,
// both against the dataset labels.
OverrideEval midlayer_override_eval(const MlpModel& model, const ProbeIndex& probe,
                                    const EmbeddingTrace& trace, const Dataset& ds,
                                    std::span<const std::int64_t> ids);

struct BucketTrend {
  std::vector<int> bucket;
  std::vector<std::int64_t> count;
  std::vector<double> mean;
  SpearmanResult rank_corr;
};
// Means of y grouped by integer bucket round(x); buckets under min_count are
// dropped. Throws when fewer than two buckets survive.
BucketTrend bucket_trend(std::span<const double> xs, std::span<const double> ys,
                         int min_count = 10);

}  // namespace predepth
