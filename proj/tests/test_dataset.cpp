#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "predepth/dataset.hpp"
#include "predepth/prng.hpp"

using namespace predepth;

namespace {

// Leave-one-out 1-NN accuracy, brute force.
double loo_1nn_accuracy(const Dataset& ds) {
  std::int64_t hits = 0;
  for (std::int64_t i = 0; i < ds.n; ++i) {
    double best = 1e300;
    std::int64_t best_j = -1;
    for (std::int64_t j = 0; j < ds.n; ++j) {
      if (j == i) continue;
      double d = 0;
      for (int k = 0; k < ds.d; ++k) {
        double diff = ds.features[i * ds.d + k] - ds.features[j * ds.d + k];
        d += diff * diff;
      }
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    hits += ds.labels[best_j] == ds.labels[i] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(ds.n);
}

// Hand-rolled logistic regression on 2 classes, full-batch gradient descent.
// Good enough to certify whether a dataset is linearly separable.
double linear_oracle_accuracy(const Dataset& ds) {
  REQUIRE(ds.num_classes == 2);
  std::vector<double> w(ds.d, 0.0);
  double b = 0.0;
  const double lr = 0.5;
  for (int step = 0; step < 3000; ++step) {
    std::vector<double> gw(ds.d, 0.0);
    double gb = 0.0;
    for (std::int64_t i = 0; i < ds.n; ++i) {
      double z = b;
      for (int k = 0; k < ds.d; ++k) z += w[k] * ds.features[i * ds.d + k];
      double p = 1.0 / (1.0 + std::exp(-z));
      double err = p - (ds.labels[i] == 1 ? 1.0 : 0.0);
      for (int k = 0; k < ds.d; ++k) gw[k] += err * ds.features[i * ds.d + k];
      gb += err;
    }
    for (int k = 0; k < ds.d; ++k) w[k] -= lr * gw[k] / ds.n;
    b -= lr * gb / ds.n;
  }
  std::int64_t hits = 0;
  for (std::int64_t i = 0; i < ds.n; ++i) {
    double z = b;
    for (int k = 0; k < ds.d; ++k) z += w[k] * ds.features[i * ds.d + k];
    hits += (z > 0 ? 1 : 0) == ds.labels[i] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(ds.n);
}

std::string write_temp(const std::string& name, const std::string& bytes) {
  std::string path = "test_tmp_" + name;
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  return path;
}

std::string idx_images(const std::vector<std::uint8_t>& pixels, std::uint32_t count,
                       std::uint32_t rows, std::uint32_t cols) {
  std::string s;
  auto be32 = [&](std::uint32_t v) {
    for (int i = 3; i >= 0; --i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  be32(0x00000803);
  be32(count);
  be32(rows);
  be32(cols);
  for (auto p : pixels) s.push_back(static_cast<char>(p));
  return s;
}

std::string idx_labels(const std::vector<std::uint8_t>& labels) {
  std::string s;
  auto be32 = [&](std::uint32_t v) {
    for (int i = 3; i >= 0; --i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  be32(0x00000801);
  be32(static_cast<std::uint32_t>(labels.size()));
  for (auto y : labels) s.push_back(static_cast<char>(y));
  return s;
}

}  // namespace

TEST_CASE("gaussian_blobs: zero-variance limit collapses each class to its center") {
  // sigma in the denormal range: the jitter rounds away against the center.
  Dataset c = gaussian_blobs(3, 50, 4, 5.0, 1e-30, 9);
  for (int cls = 0; cls < 3; ++cls)
    for (int i = 1; i < 50; ++i)
      for (int k = 0; k < 4; ++k)
        CHECK(c.features[(cls * 50 + i) * 4 + k] == c.features[(cls * 50) * 4 + k]);

  Dataset two = gaussian_blobs(2, 1, 2, 5.0, 1e-30, 9);
  CHECK(two.n == 2);
  CHECK(two.features[0] != two.features[2]);  // distinct class centers
}

TEST_CASE("gaussian_blobs: determinism is byte-level") {
  Dataset a = gaussian_blobs(3, 100, 8, 5.0, 1.0, 7);
  Dataset b = gaussian_blobs(3, 100, 8, 5.0, 1.0, 7);
  REQUIRE(a.features.size() == b.features.size());
  CHECK(std::memcmp(a.features.data(), b.features.data(),
                    a.features.size() * sizeof(float)) == 0);
  Dataset c = gaussian_blobs(3, 100, 8, 5.0, 1.0, 8);
  CHECK(std::memcmp(a.features.data(), c.features.data(),
                    a.features.size() * sizeof(float)) != 0);
}

TEST_CASE("gaussian_blobs: well-separated blobs are 1-NN learnable") {
  Dataset ds = gaussian_blobs(2, 200, 2, 10.0, 1.0, 1);
  CHECK(loo_1nn_accuracy(ds) >= 0.99);
}

TEST_CASE("gaussian_blobs: rejects bad arguments") {
  CHECK_THROWS_AS(gaussian_blobs(1, 10, 2, 1.0, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_blobs(2, 0, 2, 1.0, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_blobs(2, 10, 0, 1.0, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_blobs(2, 10, 2, 1.0, 0.0, 0), std::invalid_argument);
}

TEST_CASE("concentric_rings: zero-noise geometry puts classes on exact radii") {
  Dataset ds = concentric_rings(2, 4, 1.0, 0.0, 0);
  for (std::int64_t i = 0; i < ds.n; ++i) {
    double r = std::hypot(ds.features[i * 2], ds.features[i * 2 + 1]);
    CHECK(r == doctest::Approx(ds.labels[i] + 1.0).epsilon(1e-5));
  }
}

TEST_CASE("concentric_rings: determinism") {
  Dataset a = concentric_rings(3, 40, 1.5, 0.1, 5);
  Dataset b = concentric_rings(3, 40, 1.5, 0.1, 5);
  CHECK(std::memcmp(a.features.data(), b.features.data(),
                    a.features.size() * sizeof(float)) == 0);
}

TEST_CASE("concentric_rings: not linearly separable") {
  Dataset ds = concentric_rings(2, 500, 1.0, 0.05, 3);
  CHECK(linear_oracle_accuracy(ds) < 0.7);
}

TEST_CASE("inject_label_noise: fraction 0 is the identity") {
  Dataset ds = gaussian_blobs(3, 30, 2, 3.0, 1.0, 2);
  Dataset out = inject_label_noise(ds, 0.0, 77);
  CHECK(out.labels == ds.labels);
  for (auto m : out.noise_mask) CHECK(m == 0);
}

TEST_CASE("inject_label_noise: fraction 1 with two classes flips everything") {
  Dataset ds = gaussian_blobs(2, 25, 2, 3.0, 1.0, 2);
  Dataset out = inject_label_noise(ds, 1.0, 77);
  for (std::int64_t i = 0; i < out.n; ++i) {
    CHECK(out.labels[i] == 1 - out.original_labels[i]);
    CHECK(out.noise_mask[i] == 1);
  }
}

TEST_CASE("inject_label_noise: exact count and never the original label") {
  Dataset ds = gaussian_blobs(4, 250, 2, 3.0, 1.0, 2);  // n = 1000
  Dataset out = inject_label_noise(ds, 0.4, 123);
  std::int64_t flipped = 0;
  for (std::int64_t i = 0; i < out.n; ++i) {
    if (out.noise_mask[i]) {
      ++flipped;
      CHECK(out.labels[i] != out.original_labels[i]);
    } else {
      CHECK(out.labels[i] == out.original_labels[i]);
    }
    CHECK(out.original_labels[i] == ds.labels[i]);
  }
  CHECK(flipped == 400);
}

TEST_CASE("inject_label_noise: property over random fractions") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    int classes = 2 + static_cast<int>(rng.bounded(5));
    int per_class = 5 + static_cast<int>(rng.bounded(40));
    double fraction = rng.next_double();
    Dataset ds = gaussian_blobs(classes, per_class, 3, 3.0, 1.0, rng.next_u64());
    Dataset out = inject_label_noise(ds, fraction, rng.next_u64());
    std::int64_t flipped = 0;
    for (std::int64_t i = 0; i < out.n; ++i) {
      if (out.noise_mask[i]) {
        ++flipped;
        CHECK(out.labels[i] != out.original_labels[i]);
      }
      CHECK(out.labels[i] >= 0);
      CHECK(out.labels[i] < classes);
    }
    CHECK(flipped == round_half_up(fraction * static_cast<double>(ds.n)));
  }
  CHECK_THROWS_AS(inject_label_noise(gaussian_blobs(2, 5, 2, 1, 1, 0), 1.5, 0),
                  std::invalid_argument);
}

TEST_CASE("load_idx: scaling, flattening and error paths") {
  auto img = write_temp("idx_img", idx_images({0, 255, 0, 255}, 1, 2, 2));
  auto lab = write_temp("idx_lab", idx_labels({3}));
  Dataset ds = load_idx(img, lab);
  REQUIRE(ds.n == 1);
  REQUIRE(ds.d == 4);
  CHECK(ds.features[0] == 0.0f);
  CHECK(ds.features[1] == 1.0f);
  CHECK(ds.features[2] == 0.0f);
  CHECK(ds.features[3] == 1.0f);
  CHECK(ds.labels[0] == 3);

  // declared class count too small for the stored label
  CHECK_THROWS_WITH_AS((void)load_idx(img, lab, 3),
                       doctest::Contains("exceeds declared num_classes"),
                       std::runtime_error);

  auto bad_magic = write_temp("idx_badmagic", idx_labels({3}));
  CHECK_THROWS_WITH_AS((void)load_idx(bad_magic, lab), doctest::Contains("magic"),
                       std::runtime_error);

  auto empty_lab = write_temp("idx_emptylab", idx_labels({}));
  CHECK_THROWS_WITH_AS((void)load_idx(img, empty_lab),
                       doctest::Contains("count mismatch"), std::runtime_error);

  auto truncated = write_temp("idx_trunc", idx_images({0, 255}, 1, 2, 2));
  CHECK_THROWS_WITH_AS((void)load_idx(truncated, lab), doctest::Contains("truncated"),
                       std::runtime_error);
}

TEST_CASE("concat_datasets pads the narrower feature space") {
  Dataset a = gaussian_blobs(3, 4, 5, 2.0, 1.0, 1);
  Dataset b = concentric_rings(2, 4, 1.0, 0.1, 2);
  Dataset c = concat_datasets(a, b);
  CHECK(c.n == a.n + b.n);
  CHECK(c.d == 5);
  CHECK(c.num_classes == 3);
  for (std::int64_t i = 0; i < b.n; ++i) {
    CHECK(c.features[(a.n + i) * 5 + 0] == b.features[i * 2 + 0]);
    CHECK(c.features[(a.n + i) * 5 + 1] == b.features[i * 2 + 1]);
    CHECK(c.features[(a.n + i) * 5 + 2] == 0.0f);
    CHECK(c.labels[a.n + i] == b.labels[i]);
  }
}

TEST_CASE("make_split: deterministic, disjoint, covering") {
  SplitSpec s = make_split(100, 0.1, 9);
  SplitSpec t = make_split(100, 0.1, 9);
  CHECK(s.train_indices == t.train_indices);
  CHECK(s.val_indices == t.val_indices);
  CHECK(s.val_indices.size() == 10);
  CHECK(s.train_indices.size() == 90);
  std::vector<bool> seen(100, false);
  for (auto i : s.train_indices) seen[i] = true;
  for (auto i : s.val_indices) {
    CHECK(!seen[i]);
    seen[i] = true;
  }
  for (bool b : seen) CHECK(b);
  SplitSpec u = make_split(100, 0.1, 10);
  CHECK(u.val_indices != s.val_indices);
}

TEST_CASE("dataset csv round trip") {
  Dataset ds = inject_label_noise(gaussian_blobs(3, 20, 4, 2.0, 1.0, 4), 0.3, 5);
  std::ostringstream out;
  write_dataset_csv(ds, out);
  std::istringstream in(out.str());
  Dataset back = read_dataset_csv(in);
  CHECK(back.n == ds.n);
  CHECK(back.d == ds.d);
  CHECK(back.labels == ds.labels);
  CHECK(back.original_labels == ds.original_labels);
  CHECK(back.noise_mask == ds.noise_mask);
  CHECK(std::memcmp(back.features.data(), ds.features.data(),
                    ds.features.size() * sizeof(float)) == 0);
}

TEST_CASE("derive_seed separates purposes and indices") {
  CHECK(derive_seed(1, "a", 0) != derive_seed(1, "b", 0));
  CHECK(derive_seed(1, "a", 0) != derive_seed(1, "a", 1));
  CHECK(derive_seed(1, "a", 0) != derive_seed(2, "a", 0));
  CHECK(derive_seed(1, "a", 0) == derive_seed(1, "a", 0));
}
