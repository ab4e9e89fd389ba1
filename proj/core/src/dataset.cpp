#include "predepth/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "predepth/csv.hpp"
#include "predepth/prng.hpp"

namespace predepth {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

Dataset gaussian_blobs(int num_classes, int per_class, int dim,
                       double center_scale, double sigma, std::uint64_t seed) {
  require(num_classes >= 2, "gaussian_blobs: num_classes must be >= 2");
  require(per_class >= 1, "gaussian_blobs: per_class must be >= 1");
  require(dim >= 1, "gaussian_blobs: dim must be >= 1");
  require(sigma > 0.0, "gaussian_blobs: sigma must be > 0");

  Rng center_rng(derive_seed(seed, "blobs.centers", 0));
  std::vector<double> centers(static_cast<std::size_t>(num_classes) * dim);
  for (auto& c : centers) c = center_rng.uniform(-center_scale, center_scale);

  Dataset ds;
  ds.n = static_cast<std::int64_t>(num_classes) * per_class;
  ds.d = dim;
  ds.num_classes = num_classes;
  ds.features.resize(static_cast<std::size_t>(ds.n) * dim);
  ds.labels.resize(ds.n);
  ds.original_labels.resize(ds.n);
  ds.noise_mask.assign(ds.n, 0);

  std::int64_t row = 0;
  for (int c = 0; c < num_classes; ++c) {
    Rng rng(derive_seed(seed, "blobs.points", static_cast<std::uint64_t>(c)));
    for (int i = 0; i < per_class; ++i, ++row) {
      float* out = ds.features.data() + row * dim;
      for (int k = 0; k < dim; ++k)
        out[k] = static_cast<float>(centers[static_cast<std::size_t>(c) * dim + k] +
                                    sigma * rng.next_gaussian());
      ds.labels[row] = c;
      ds.original_labels[row] = c;
    }
  }
  return ds;
}

Dataset concentric_rings(int num_classes, int per_class, double radius_gap,
                         double noise_sigma, std::uint64_t seed) {
  require(num_classes >= 2, "concentric_rings: num_classes must be >= 2");
  require(per_class >= 1, "concentric_rings: per_class must be >= 1");
  require(radius_gap > 0.0, "concentric_rings: radius_gap must be > 0");
  require(noise_sigma >= 0.0, "concentric_rings: noise_sigma must be >= 0");

  Dataset ds;
  ds.n = static_cast<std::int64_t>(num_classes) * per_class;
  ds.d = 2;
  ds.num_classes = num_classes;
  ds.features.resize(static_cast<std::size_t>(ds.n) * 2);
  ds.labels.resize(ds.n);
  ds.original_labels.resize(ds.n);
  ds.noise_mask.assign(ds.n, 0);

  std::int64_t row = 0;
  for (int c = 0; c < num_classes; ++c) {
    Rng rng(derive_seed(seed, "rings.points", static_cast<std::uint64_t>(c)));
    for (int i = 0; i < per_class; ++i, ++row) {
      double angle = rng.uniform(0.0, 6.283185307179586477);
      double radius = (c + 1) * radius_gap + noise_sigma * rng.next_gaussian();
      ds.features[row * 2 + 0] = static_cast<float>(radius * std::cos(angle));
      ds.features[row * 2 + 1] = static_cast<float>(radius * std::sin(angle));
      ds.labels[row] = c;
      ds.original_labels[row] = c;
    }
  }
  return ds;
}

Dataset inject_label_noise(const Dataset& base, double fraction, std::uint64_t seed) {
  require(fraction >= 0.0 && fraction <= 1.0,
          "inject_label_noise: fraction must be in [0,1]");
  Dataset ds = base;
  std::int64_t count = round_half_up(fraction * static_cast<double>(ds.n));
  if (count == 0) return ds;

  // Pick `count` indices without replacement, then flip each to a uniformly
  // random different class.
  std::vector<std::int64_t> idx(static_cast<std::size_t>(ds.n));
  for (std::int64_t i = 0; i < ds.n; ++i) idx[static_cast<std::size_t>(i)] = i;
  Rng rng(derive_seed(seed, "label_noise", 0));
  rng.shuffle(idx);
  for (std::int64_t j = 0; j < count; ++j) {
    std::int64_t i = idx[static_cast<std::size_t>(j)];
    std::int32_t old = ds.original_labels[i];
    std::int32_t offset =
        1 + static_cast<std::int32_t>(rng.bounded(static_cast<std::uint64_t>(ds.num_classes - 1)));
    ds.labels[i] = (old + offset) % ds.num_classes;
    ds.noise_mask[i] = 1;
  }
  return ds;
}

namespace {

std::uint32_t read_be_u32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("idx: truncated " + what);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 int expected_classes) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("idx: cannot open " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("idx: cannot open " + labels_path);

  const std::uint32_t img_magic = read_be_u32(img, "image magic");
  if (img_magic != 0x00000803)
    throw std::runtime_error("idx: bad image magic " + std::to_string(img_magic));
  const std::uint32_t img_count = read_be_u32(img, "image count");
  const std::uint32_t rows = read_be_u32(img, "image rows");
  const std::uint32_t cols = read_be_u32(img, "image cols");

  const std::uint32_t lab_magic = read_be_u32(lab, "label magic");
  if (lab_magic != 0x00000801)
    throw std::runtime_error("idx: bad label magic " + std::to_string(lab_magic));
  const std::uint32_t lab_count = read_be_u32(lab, "label count");
  if (img_count != lab_count)
    throw std::runtime_error("idx: count mismatch between images (" +
                             std::to_string(img_count) + ") and labels (" +
                             std::to_string(lab_count) + ")");
  if (img_count == 0) throw std::runtime_error("idx: count mismatch: zero items");

  const std::int64_t dim = static_cast<std::int64_t>(rows) * cols;
  Dataset ds;
  ds.n = img_count;
  ds.d = static_cast<int>(dim);
  ds.features.resize(static_cast<std::size_t>(ds.n) * dim);
  ds.labels.resize(ds.n);
  ds.original_labels.resize(ds.n);
  ds.noise_mask.assign(ds.n, 0);

  std::vector<unsigned char> buf(static_cast<std::size_t>(dim));
  std::int32_t max_label = 0;
  for (std::int64_t i = 0; i < ds.n; ++i) {
    img.read(reinterpret_cast<char*>(buf.data()), dim);
    if (!img) throw std::runtime_error("idx: truncated image payload at item " +
                                       std::to_string(i));
    for (std::int64_t k = 0; k < dim; ++k)
      ds.features[i * dim + k] = static_cast<float>(buf[static_cast<std::size_t>(k)]) / 255.0f;
    unsigned char y;
    lab.read(reinterpret_cast<char*>(&y), 1);
    if (!lab) throw std::runtime_error("idx: truncated label payload at item " +
                                       std::to_string(i));
    if (expected_classes > 0 && y >= expected_classes)
      throw std::runtime_error("idx: label " + std::to_string(y) + " at item " +
                               std::to_string(i) + " exceeds declared num_classes " +
                               std::to_string(expected_classes));
    ds.labels[i] = y;
    ds.original_labels[i] = y;
    max_label = std::max(max_label, static_cast<std::int32_t>(y));
  }
  ds.num_classes = expected_classes > 0 ? expected_classes : max_label + 1;
  return ds;
}

Dataset concat_datasets(const Dataset& a, const Dataset& b) {
  Dataset ds;
  ds.d = std::max(a.d, b.d);
  ds.n = a.n + b.n;
  ds.num_classes = std::max(a.num_classes, b.num_classes);
  ds.features.assign(static_cast<std::size_t>(ds.n) * ds.d, 0.0f);
  ds.labels.reserve(ds.n);
  ds.original_labels.reserve(ds.n);
  ds.noise_mask.reserve(ds.n);
  const Dataset* parts[2] = {&a, &b};
  std::int64_t row = 0;
  for (const Dataset* p : parts) {
    for (std::int64_t i = 0; i < p->n; ++i, ++row) {
      const float* src = p->features.data() + i * p->d;
      std::copy(src, src + p->d, ds.features.data() + row * ds.d);
      ds.labels.push_back(p->labels[i]);
      ds.original_labels.push_back(p->original_labels[i]);
      ds.noise_mask.push_back(p->noise_mask[i]);
    }
  }
  return ds;
}

SplitSpec make_split(std::int64_t n, double val_fraction, std::uint64_t seed) {
  require(n >= 1, "make_split: empty dataset");
  require(val_fraction >= 0.0 && val_fraction < 1.0,
          "make_split: val_fraction must be in [0,1)");
  std::vector<std::int32_t> idx(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(i);
  Rng rng(derive_seed(seed, "split", 0));
  rng.shuffle(idx);
  std::int64_t val_count = round_half_up(val_fraction * static_cast<double>(n));
  SplitSpec s;
  s.seed = seed;
  s.val_indices.assign(idx.begin(), idx.begin() + val_count);
  s.train_indices.assign(idx.begin() + val_count, idx.end());
  std::sort(s.val_indices.begin(), s.val_indices.end());
  std::sort(s.train_indices.begin(), s.train_indices.end());
  return s;
}

void write_dataset_csv(const Dataset& ds, std::ostream& out) {
  out << "id,label,original_label,noisy";
  for (int k = 0; k < ds.d; ++k) out << ",f" << k;
  out << '\n';
  for (std::int64_t i = 0; i < ds.n; ++i) {
    out << i << ',' << ds.labels[i] << ',' << ds.original_labels[i] << ','
        << static_cast<int>(ds.noise_mask[i]);
    for (int k = 0; k < ds.d; ++k) out << ',' << fmt_float(ds.features[i * ds.d + k]);
    out << '\n';
  }
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset csv: empty stream");
  auto header = split_csv_line(line);
  if (header.size() < 5 || header[0] != "id" || header[1] != "label")
    throw std::runtime_error("dataset csv: unexpected header");
  const int d = static_cast<int>(header.size()) - 4;

  Dataset ds;
  ds.d = d;
  std::int32_t max_label = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (static_cast<int>(f.size()) != d + 4)
      throw std::runtime_error("dataset csv: ragged row");
    ds.labels.push_back(static_cast<std::int32_t>(std::stol(f[1])));
    ds.original_labels.push_back(static_cast<std::int32_t>(std::stol(f[2])));
    ds.noise_mask.push_back(static_cast<std::uint8_t>(std::stoi(f[3])));
    for (int k = 0; k < d; ++k) ds.features.push_back(std::strtof(f[4 + k].c_str(), nullptr));
    max_label = std::max({max_label, ds.labels.back(), ds.original_labels.back()});
  }
  ds.n = static_cast<std::int64_t>(ds.labels.size());
  ds.num_classes = max_label + 1;
  return ds;
}

}  // namespace predepth
