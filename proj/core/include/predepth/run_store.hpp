#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "predepth/dataset.hpp"
#include "predepth/knn.hpp"
#include "predepth/mlp.hpp"

namespace predepth {

struct BlobsSpec {
  int classes = 10;
  int per_class = 500;
  int dim = 16;
  double center_scale = 2.0;
  double sigma = 1.0;
};

struct RingsSpec {
  int classes = 2;
  int per_class = 250;
  double radius_gap = 1.0;
  double noise_sigma = 0.12;
};

struct DatasetSpec {
  std::string kind = "blobs+rings";  // blobs | rings | blobs+rings | idx
  BlobsSpec blobs;
  RingsSpec rings;
  std::string idx_images;
  std::string idx_labels;
  double noise_fraction = 0.2;
};

// Deterministic dataset construction; every sub-seed is derived from
// base_seed with a purpose tag. In the mixture, ring features are
// zero-padded into the blob feature space and ring class c keeps label c.
Dataset build_dataset(const DatasetSpec& spec, std::uint64_t base_seed);

struct ProbeConfig {
  int k = kDefaultProbeK;
  std::string metric = "squared_euclidean";
  SelfMode self_mode = SelfMode::include;
};

// Every knob that changes derived metrics, echoed verbatim into the manifest
// so that analyses are a pure function of the run directory.
struct PolicyRecord {
  std::string entropy_log_base = "e";
  std::string percentile_method = "linear_interpolation";
  std::string consensus_tiebreak = "truth_then_lowest_index";
  std::string argmax_tiebreak = "lowest_index";
  std::string tau_rescale_scope = "union";
  int override_layer = 0;  // 0 means ceil(L/2), resolved at run time
};

struct FileEntry {
  std::string path;  // relative to the run directory
  std::uint64_t bytes = 0;
  std::uint64_t digest = 0;  // FNV-1a 64 over the raw bytes
};

struct RunManifest {
  int schema_version = 1;
  std::uint64_t base_seed = 1;
  int ensemble_size = 25;
  double val_fraction = 0.1;
  DatasetSpec dataset;
  std::int64_t dataset_rows = 0;
  int dataset_dim = 0;
  int dataset_classes = 0;
  std::vector<int> model_widths;
  TrainConfig train;
  ProbeConfig probe;
  PolicyRecord policy;
  std::vector<int> diverged_members;
  std::int64_t occurrence_count = 0;
  std::int64_t undefined_depth_count = 0;
  std::vector<FileEntry> files;
};

std::uint64_t file_digest(const std::string& path);
std::string digest_hex(std::uint64_t digest);

std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);

void write_manifest(const std::string& run_dir, const RunManifest& m);
RunManifest read_manifest(const std::string& run_dir);

struct VerifyIssue {
  std::string kind;  // missing_file | digest_mismatch | size_mismatch |
                     // schema_version | rederivation_mismatch | read_error
  std::string file;
  std::string detail;
};

struct VerifyReport {
  bool ok = true;
  std::vector<VerifyIssue> issues;
  void add(const std::string& kind, const std::string& file, const std::string& detail) {
    ok = false;
    issues.push_back({kind, file, detail});
  }
};

// Inventory-level verification: presence, size and digest of every file
// named in the manifest. The metric re-derivation pass lives in pipeline.
VerifyReport verify_files(const std::string& run_dir, const RunManifest& m);

}  // namespace predepth
