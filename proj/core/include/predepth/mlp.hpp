#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "predepth/dataset.hpp"

namespace predepth {

// Fully-connected ReLU classifier. weights[l] is row-major [in x out] with
// W[k*out + j] connecting input k to output j, which keeps the inner loops
// of both passes contiguous over j.
template <typename T>
struct BasicMlp {
  std::vector<int> widths;  // input, hidden..., num_classes
  std::vector<std::vector<T>> weights;
  std::vector<std::vector<T>> biases;

  int num_layers() const { return static_cast<int>(widths.size()) - 1; }
  int hidden_layers() const { return num_layers() - 1; }
  int input_dim() const { return widths.front(); }
  int num_classes() const { return widths.back(); }
  // Probe points: input, each hidden pre-activation, softmax.
  int probe_count() const { return hidden_layers() + 2; }
};

using MlpModel = BasicMlp<float>;

enum class Loss { cross_entropy, zero_hinge };
enum class Optimizer { sgd, full_batch_gd };

struct TrainConfig {
  Loss loss = Loss::cross_entropy;
  Optimizer optimizer = Optimizer::sgd;
  double learning_rate = 0.04;
  double momentum = 0.9;
  int batch_size = 256;
  std::vector<std::int64_t> schedule;  // absolute steps; lr *= 1/5 after each
  std::int64_t total_steps = 2000;
  std::int64_t log_every = 1;
  std::uint64_t seed = 0;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::int64_t step, const std::string& what)
      : std::runtime_error("divergence at step " + std::to_string(step) + ": " + what),
        step(step) {}
  std::int64_t step;
};

struct TrainingLog {
  std::vector<std::int64_t> steps;  // checkpoint steps, strictly increasing
  std::vector<double> lr;           // lr in effect after the checkpoint step
  // predictions[c][i]: argmax prediction for dataset row i at checkpoint c.
  std::vector<std::vector<std::int32_t>> predictions;

  struct Series {
    bool present = false;  // false when the partition is empty
    std::vector<double> loss;
    std::vector<double> acc;
  };
  Series clean_train;        // train rows with untouched labels
  Series noisy_train;        // noised train rows scored against noisy labels
  Series noisy_vs_original;  // same rows scored against pre-noise labels
  Series validation;
};

struct EmbeddingTrace {
  std::int64_t rows = 0;
  std::vector<int> dims;                   // per-probe width
  std::vector<std::vector<float>> probes;  // [probe][rows * dim], row-major

  int probe_count() const { return static_cast<int>(probes.size()); }
  std::span<const float> at(int probe, std::int64_t row) const {
    return {probes[probe].data() + row * dims[probe],
            static_cast<std::size_t>(dims[probe])};
  }
};

struct TrainResult {
  MlpModel model;
  TrainingLog log;
  EmbeddingTrace trace;
};

// ---- templated kernels ----

template <typename T>
struct Workspace {
  std::vector<std::vector<T>> pre;  // pre-activation per dense layer
  std::vector<std::vector<T>> act;  // act[0] = input copy, act[l+1] = relu(pre[l])
  void resize(const BasicMlp<T>& m) {
    int L = m.num_layers();
    pre.resize(L);
    act.resize(L + 1);
    act[0].resize(m.widths[0]);
    for (int l = 0; l < L; ++l) {
      pre[l].resize(m.widths[l + 1]);
      if (l + 1 <= L) act[l + 1].resize(m.widths[l + 1]);
    }
  }
};

template <typename T>
void forward(const BasicMlp<T>& m, std::span<const T> x, Workspace<T>& ws) {
  const int L = m.num_layers();
  std::copy(x.begin(), x.end(), ws.act[0].begin());
  for (int l = 0; l < L; ++l) {
    const int in = m.widths[l];
    const int out = m.widths[l + 1];
    const T* W = m.weights[l].data();
    T* __restrict z = ws.pre[l].data();
    std::copy(m.biases[l].begin(), m.biases[l].end(), z);
    const T* a = ws.act[l].data();
    for (int k = 0; k < in; ++k) {
      const T ak = a[k];
      if (ak == T(0)) continue;
      const T* __restrict wrow = W + static_cast<std::size_t>(k) * out;
      for (int j = 0; j < out; ++j) z[j] += wrow[j] * ak;
    }
    if (l + 1 < L) {
      T* __restrict a1 = ws.act[l + 1].data();
      for (int j = 0; j < out; ++j) a1[j] = z[j] > T(0) ? z[j] : T(0);
    }
  }
}

// argmax with ties resolved to the lowest class index.
template <typename T>
int argmax_lowest(std::span<const T> v) {
  int best = 0;
  for (int j = 1; j < static_cast<int>(v.size()); ++j)
    if (v[j] > v[best]) best = j;
  return best;
}

// Numerically shifted softmax; rows sum to 1 within float rounding.
template <typename T>
void softmax_into(std::span<const T> logits, std::span<float> out) {
  T mx = logits[0];
  for (T z : logits) mx = z > mx ? z : mx;
  double sum = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    double e = std::exp(static_cast<double>(logits[j] - mx));
    out[j] = static_cast<float>(e);
    sum += e;
  }
  const float inv = static_cast<float>(1.0 / sum);
  for (std::size_t j = 0; j < logits.size(); ++j) out[j] *= inv;
}

template <typename T>
double loss_cross_entropy(std::span<const T> logits, int label) {
  if (label < 0 || label >= static_cast<int>(logits.size()))
    throw std::invalid_argument("loss: label out of range");
  double mx = -std::numeric_limits<double>::infinity();
  for (T z : logits) {
    if (!std::isfinite(static_cast<double>(z)))
      throw std::domain_error("loss: non-finite logit");
    mx = std::max(mx, static_cast<double>(z));
  }
  double sum = 0.0;
  for (T z : logits) sum += std::exp(static_cast<double>(z) - mx);
  return std::log(sum) - (static_cast<double>(logits[label]) - mx);
}

// Multiclass hinge with zero margin: sum_{j != label} max(0, z_j - z_label).
// Zero exactly when the labeled logit is >= every other logit.
template <typename T>
double loss_zero_hinge(std::span<const T> logits, int label) {
  if (label < 0 || label >= static_cast<int>(logits.size()))
    throw std::invalid_argument("loss: label out of range");
  double acc = 0.0;
  const double zi = static_cast<double>(logits[label]);
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (!std::isfinite(static_cast<double>(logits[j])))
      throw std::domain_error("loss: non-finite logit");
    if (static_cast<int>(j) == label) continue;
    double v = static_cast<double>(logits[j]) - zi;
    if (v > 0.0) acc += v;
  }
  return acc;
}

template <typename T>
double loss_value(Loss loss, std::span<const T> logits, int label) {
  return loss == Loss::cross_entropy ? loss_cross_entropy(logits, label)
                                     : loss_zero_hinge(logits, label);
}

// d(loss)/d(logits) for one example, written into out_delta.
template <typename T>
void loss_delta(Loss loss, std::span<const T> logits, int label,
                std::span<T> out_delta) {
  const int C = static_cast<int>(logits.size());
  if (loss == Loss::cross_entropy) {
    T mx = logits[0];
    for (T z : logits) mx = z > mx ? z : mx;
    double sum = 0.0;
    std::vector<double> e(static_cast<std::size_t>(C));
    for (int j = 0; j < C; ++j) {
      e[j] = std::exp(static_cast<double>(logits[j] - mx));
      sum += e[j];
    }
    for (int j = 0; j < C; ++j)
      out_delta[j] = static_cast<T>(e[j] / sum - (j == label ? 1.0 : 0.0));
  } else {
    int violations = 0;
    for (int j = 0; j < C; ++j) {
      if (j == label) continue;
      bool v = logits[j] > logits[label];
      out_delta[j] = v ? T(1) : T(0);
      violations += v ? 1 : 0;
    }
    out_delta[label] = static_cast<T>(-violations);
  }
}

// Gradients of the mean batch loss; accumulated in double regardless of the
// parameter type.
struct Gradients {
  std::vector<std::vector<double>> w;
  std::vector<std::vector<double>> b;
  template <typename T>
  void resize_like(const BasicMlp<T>& m) {
    w.resize(m.weights.size());
    b.resize(m.biases.size());
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
      w[l].assign(m.weights[l].size(), 0.0);
      b[l].assign(m.biases[l].size(), 0.0);
    }
  }
  void clear() {
    for (auto& v : w) std::fill(v.begin(), v.end(), 0.0);
    for (auto& v : b) std::fill(v.begin(), v.end(), 0.0);
  }
};

// Reverse pass from a logit-space delta. Accumulates parameter gradients
// into `grads` when non-null; writes d(delta . z)/dx into `x_grad` when
// non-null. `ws` must hold the forward state of the same example.
template <typename T>
void backprop_delta(const BasicMlp<T>& m, const Workspace<T>& ws,
                    std::vector<T>& delta, std::vector<T>& delta_prev,
                    Gradients* grads, double* x_grad = nullptr) {
  const int L = m.num_layers();
  for (int l = L - 1; l >= 0; --l) {
    const int in = m.widths[l];
    const int out = m.widths[l + 1];
    const T* a = ws.act[l].data();
    if (grads) {
      double* gw = grads->w[l].data();
      double* __restrict gb = grads->b[l].data();
      const T* __restrict dl = delta.data();
      for (int j = 0; j < out; ++j) gb[j] += static_cast<double>(dl[j]);
      for (int k = 0; k < in; ++k) {
        const double ak = static_cast<double>(a[k]);
        if (ak == 0.0) continue;
        double* __restrict grow = gw + static_cast<std::size_t>(k) * out;
        for (int j = 0; j < out; ++j) grow[j] += ak * static_cast<double>(dl[j]);
      }
    }
    const bool need_input = (l > 0) || (x_grad != nullptr);
    if (!need_input) break;
    delta_prev.assign(static_cast<std::size_t>(in), T(0));
    const T* W = m.weights[l].data();
    const T* __restrict dl = delta.data();
    for (int k = 0; k < in; ++k) {
      // Eight independent partial sums with a fixed combine order; this is
      // the defined summation order of the backward pass.
      const T* __restrict wrow = W + static_cast<std::size_t>(k) * out;
      T s[8] = {};
      int j = 0;
      for (; j + 8 <= out; j += 8)
        for (int u = 0; u < 8; ++u) s[u] += wrow[j + u] * dl[j + u];
      T total = ((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7]));
      for (; j < out; ++j) total += wrow[j] * dl[j];
      delta_prev[k] = total;
    }
    if (l > 0) {
      // ReLU mask from the preceding pre-activation.
      const T* z = ws.pre[l - 1].data();
      for (int k = 0; k < in; ++k)
        if (z[k] <= T(0)) delta_prev[k] = T(0);
    } else if (x_grad) {
      for (int k = 0; k < in; ++k) x_grad[k] = static_cast<double>(delta_prev[k]);
    }
    std::swap(delta, delta_prev);
  }
}

// Mean-batch-loss gradients for a gathered batch (xs is [b x d] row-major).
// Returns the mean loss. Throws DivergenceError-free diagnostics via
// domain_error on non-finite intermediates.
template <typename T>
double backward_batch(const BasicMlp<T>& m, const T* xs, std::int64_t b, int d,
                      const std::int32_t* labels, Loss loss, Gradients& grads) {
  if (b <= 0) throw std::invalid_argument("backward: empty batch");
  if (d != m.input_dim()) throw std::invalid_argument("backward: dimension mismatch");
  Workspace<T> ws;
  ws.resize(m);
  std::vector<T> delta(m.num_classes()), delta_prev;
  double loss_sum = 0.0;
  for (std::int64_t i = 0; i < b; ++i) {
    std::span<const T> x{xs + i * d, static_cast<std::size_t>(d)};
    forward(m, x, ws);
    std::span<const T> logits{ws.pre.back().data(), static_cast<std::size_t>(m.num_classes())};
    loss_sum += loss_value(loss, logits, labels[i]);
    loss_delta(loss, logits, labels[i], std::span<T>(delta));
    backprop_delta(m, ws, delta, delta_prev, &grads);
  }
  const double inv = 1.0 / static_cast<double>(b);
  for (auto& v : grads.w)
    for (auto& g : v) g *= inv;
  for (auto& v : grads.b)
    for (auto& g : v) g *= inv;
  return loss_sum * inv;
}

// ---- public float-typed operations ----

MlpModel init_model(const std::vector<int>& widths, std::uint64_t seed);

struct ForwardEmbeddings {
  std::vector<float> logits;
  std::vector<std::vector<float>> probe_vectors;  // input, pre-acts..., softmax
};
ForwardEmbeddings forward_with_embeddings(const MlpModel& m, std::span<const float> x);

// Exact gradient of (z_i - z_j) with respect to the input.
std::vector<double> input_gradient(const MlpModel& m, std::span<const float> x,
                                   int class_i, int class_j);

TrainResult train(const MlpModel& init, const Dataset& ds, const SplitSpec& split,
                  const TrainConfig& cfg);

EmbeddingTrace capture_trace(const MlpModel& m, const Dataset& ds);

void save_model(const MlpModel& m, const std::string& path);
MlpModel load_model(const std::string& path);
void save_trace(const EmbeddingTrace& t, const std::string& path);
EmbeddingTrace load_trace(const std::string& path);

void validate_train_config(const TrainConfig& cfg);

}  // namespace predepth
