#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "predepth/config.hpp"
#include "predepth/depth.hpp"
#include "predepth/ensemble.hpp"
#include "predepth/run_store.hpp"

namespace predepth {

// ceil(L/2): the default override layer for an L-probe chain.
int default_override_layer(int max_depth);

struct EnsembleOptions {
  RunManifest manifest;  // files/stats empty until the run completes
  int jobs = 0;
};

EnsembleOptions ensemble_options_from_config(const Config& cfg);

// Trains the ensemble, computes per-member probe/depth metrics and writes
// the full run directory. Resumable: members whose artifacts already load
// cleanly are not retrained. Divergent members are recorded and skipped.
void run_ensemble(const EnsembleOptions& opts, const std::string& out_dir);

struct RunData {
  std::string dir;
  RunManifest manifest;
  Dataset dataset;
  std::vector<int> members;  // non-diverged member ids, ascending
  int max_depth = 0;         // L: probes are 0..L
  EnsembleTable table;
  std::vector<DifficultyProfile> profiles;
};

RunData load_run(const std::string& run_dir);

struct MemberProbePreds {
  std::vector<std::uint8_t> was_val;                    // per example
  std::vector<std::int32_t> final_pred;                 // per example
  std::vector<std::vector<std::int32_t>> probe_preds;   // [probe][example]
};
MemberProbePreds load_member_probes(const RunData& run, int member);

struct CurveTable {
  std::vector<std::string> partitions;
  std::vector<std::vector<CurveCell>> cells;  // [layer][partition], pooled
};
CurveTable pooled_inference_curve(const RunData& run);

struct OverrideSummary {
  std::vector<std::int64_t> ids;
  std::int64_t occurrences = 0;
  double model_accuracy = 0.0;
  double probe_accuracy = 0.0;
};
// Pooled over every validation occurrence of the `count` examples nearest
// the corner; probe predictions are taken at `layer`.
OverrideSummary corner_override_summary(const RunData& run, Corner corner, int count,
                                        int layer);

struct KSweepRow {
  int layer = 0;
  int k = 0;
  bool train_defined = false, val_defined = false;
  double acc_train = 0.0;
  double acc_val = 0.0;
};
std::vector<KSweepRow> ksweep_accuracies(const RunData& run, const std::vector<int>& ks,
                                         int jobs = 0);

struct AnalyzeOptions {
  int corner_count = 50;
  std::vector<int> ks = {10, 30};
  int override_layer = 0;  // 0: use the manifest policy
  int jobs = 0;
};

// Writes metrics/<analysis>.csv and metrics/<analysis>.svg under the run
// directory. Valid names: depth_hist, consistency, trend, corners, margins,
// curves, ksweep.
void run_analysis(const std::string& run_dir, const std::string& analysis,
                  const AnalyzeOptions& opts);

// Full verification: manifest inventory digests, bit-exact re-derivation of
// one member's metric CSVs from its stored binary artifacts, and bit-exact
// re-derivation of the cross-ensemble CSVs.
VerifyReport verify_run(const std::string& run_dir);

struct InterventionCellSpec {
  std::string name;  // ce_sgd | ce_gd | zh_sgd | zh_gd
  TrainConfig train;
};

struct InterventionOptions {
  std::uint64_t base_seed = 1;
  int jobs = 0;
  double val_fraction = 0.1;
  DatasetSpec dataset;
  std::vector<int> hidden_widths = {128, 96, 64, 32};
  ProbeConfig probe;
  std::vector<InterventionCellSpec> cells;  // defaults: the 2x2 grid
};

InterventionOptions intervention_options_from_config(const Config& cfg);

struct InterventionCellResult {
  std::string name;
  bool diverged = false;
  std::int64_t diverged_step = -1;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double mean_output_margin = 0.0;       // over the training split
  std::vector<double> probe_accuracy;    // per probe, training split
  int earliest_layer_90 = -1;            // first probe >= 0.9 * train_accuracy
};

struct InterventionResult {
  std::vector<InterventionCellResult> cells;
  const InterventionCellResult& cell(const std::string& name) const;
};

InterventionResult run_intervention(const InterventionOptions& opts,
                                    const std::string& out_dir);

}  // namespace predepth
