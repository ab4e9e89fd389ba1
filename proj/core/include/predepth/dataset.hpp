#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace predepth {

// A labeled feature matrix plus the bookkeeping needed to study fixed label
// noise: the pre-noise labels and a mask of the indices that were flipped.
struct Dataset {
  std::int64_t n = 0;
  int d = 0;
  int num_classes = 0;
  std::vector<float> features;           // row-major n x d
  std::vector<std::int32_t> labels;
  std::vector<std::int32_t> original_labels;
  std::vector<std::uint8_t> noise_mask;  // 1 iff labels[i] != original_labels[i]

  std::span<const float> row(std::int64_t i) const {
    return {features.data() + i * d, static_cast<std::size_t>(d)};
  }
};

struct SplitSpec {
  std::vector<std::int32_t> train_indices;  // sorted ascending
  std::vector<std::int32_t> val_indices;    // sorted ascending
  std::uint64_t seed = 0;
};

// round-half-up; exact for the noise fractions and split sizes we use.
inline std::int64_t round_half_up(double x) {
  return static_cast<std::int64_t>(x + 0.5);
}

Dataset gaussian_blobs(int num_classes, int per_class, int dim,
                       double center_scale, double sigma, std::uint64_t seed);

// 2-D rings: class c sits at radius (c+1)*radius_gap with radial jitter.
Dataset concentric_rings(int num_classes, int per_class, double radius_gap,
                         double noise_sigma, std::uint64_t seed);

Dataset inject_label_noise(const Dataset& base, double fraction, std::uint64_t seed);

// IDX (MNIST-style) ingestion; pixel bytes scaled to [0,1], images flattened.
// With expected_classes > 0, any label at or above it is rejected; otherwise
// the class count is inferred from the labels.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 int expected_classes = 0);

// Rows of b appended to a; the narrower feature space is zero-padded.
Dataset concat_datasets(const Dataset& a, const Dataset& b);

SplitSpec make_split(std::int64_t n, double val_fraction, std::uint64_t seed);

void write_dataset_csv(const Dataset& ds, std::ostream& out);
Dataset read_dataset_csv(std::istream& in);

}  // namespace predepth
