#include "predepth/mlp.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "predepth/prng.hpp"

namespace predepth {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// little-endian binary helpers
void put_u16(std::ostream& out, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}
void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}
void put_f32(std::ostream& out, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  put_u32(out, u);
}
std::uint16_t get_u16(std::istream& in, const std::string& what) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  if (!in) throw std::runtime_error("truncated " + what);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}
std::uint32_t get_u32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("truncated " + what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}
void get_f32_block(std::istream& in, float* dst, std::size_t count,
                   const std::string& what) {
  std::vector<unsigned char> buf(count * 4);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (!in) throw std::runtime_error("truncated " + what);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t u = 0;
    for (int k = 0; k < 4; ++k)
      u |= static_cast<std::uint32_t>(buf[i * 4 + k]) << (8 * k);
    std::memcpy(dst + i, &u, 4);
  }
}

}  // namespace

MlpModel init_model(const std::vector<int>& widths, std::uint64_t seed) {
  require(widths.size() >= 2, "init_model: need at least input and output widths");
  for (int w : widths) require(w >= 1, "init_model: widths must be positive");

  MlpModel m;
  m.widths = widths;
  m.weights.resize(widths.size() - 1);
  m.biases.resize(widths.size() - 1);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l];
    const int out = widths[l + 1];
    // Fan-in-scaled uniform: U(-a, a) with a = sqrt(6 / fan_in). Biases zero.
    const double a = std::sqrt(6.0 / static_cast<double>(in));
    Rng rng(derive_seed(seed, "init.layer", static_cast<std::uint64_t>(l)));
    m.weights[l].resize(static_cast<std::size_t>(in) * out);
    for (auto& w : m.weights[l]) w = static_cast<float>(rng.uniform(-a, a));
    m.biases[l].assign(static_cast<std::size_t>(out), 0.0f);
  }
  return m;
}

ForwardEmbeddings forward_with_embeddings(const MlpModel& m, std::span<const float> x) {
  require(static_cast<int>(x.size()) == m.input_dim(),
          "forward: input dimension mismatch");
  Workspace<float> ws;
  ws.resize(m);
  forward(m, x, ws);

  ForwardEmbeddings fe;
  fe.logits = ws.pre.back();
  fe.probe_vectors.resize(static_cast<std::size_t>(m.probe_count()));
  fe.probe_vectors[0].assign(x.begin(), x.end());
  for (int h = 0; h < m.hidden_layers(); ++h) fe.probe_vectors[h + 1] = ws.pre[h];
  std::vector<float> sm(static_cast<std::size_t>(m.num_classes()));
  softmax_into(std::span<const float>(fe.logits), std::span<float>(sm));
  fe.probe_vectors.back() = std::move(sm);
  return fe;
}

std::vector<double> input_gradient(const MlpModel& m, std::span<const float> x,
                                   int class_i, int class_j) {
  require(class_i != class_j, "input_gradient: class pair must be distinct");
  require(class_i >= 0 && class_i < m.num_classes() && class_j >= 0 &&
              class_j < m.num_classes(),
          "input_gradient: class out of range");
  require(static_cast<int>(x.size()) == m.input_dim(),
          "input_gradient: input dimension mismatch");
  Workspace<float> ws;
  ws.resize(m);
  forward(m, x, ws);
  for (float z : ws.pre.back())
    if (!std::isfinite(z)) throw std::domain_error("input_gradient: non-finite logit");
  std::vector<float> delta(static_cast<std::size_t>(m.num_classes()), 0.0f);
  delta[class_i] = 1.0f;
  delta[class_j] = -1.0f;
  std::vector<float> delta_prev;
  std::vector<double> grad(static_cast<std::size_t>(m.input_dim()), 0.0);
  backprop_delta(m, ws, delta, delta_prev, nullptr, grad.data());
  return grad;
}

EmbeddingTrace capture_trace(const MlpModel& m, const Dataset& ds) {
  require(ds.d == m.input_dim(), "capture_trace: dataset dimension mismatch");
  EmbeddingTrace t;
  t.rows = ds.n;
  t.dims.push_back(m.input_dim());
  for (int h = 0; h < m.hidden_layers(); ++h) t.dims.push_back(m.widths[h + 1]);
  t.dims.push_back(m.num_classes());
  t.probes.resize(t.dims.size());
  for (std::size_t p = 0; p < t.probes.size(); ++p)
    t.probes[p].resize(static_cast<std::size_t>(t.rows) * t.dims[p]);

  Workspace<float> ws;
  ws.resize(m);
  std::vector<float> sm(static_cast<std::size_t>(m.num_classes()));
  for (std::int64_t i = 0; i < ds.n; ++i) {
    forward(m, ds.row(i), ws);
    auto x = ds.row(i);
    std::copy(x.begin(), x.end(), t.probes[0].begin() + i * t.dims[0]);
    for (int h = 0; h < m.hidden_layers(); ++h)
      std::copy(ws.pre[h].begin(), ws.pre[h].end(),
                t.probes[h + 1].begin() + i * t.dims[h + 1]);
    softmax_into(std::span<const float>(ws.pre.back()), std::span<float>(sm));
    std::copy(sm.begin(), sm.end(), t.probes.back().begin() + i * t.dims.back());
  }
  return t;
}

void validate_train_config(const TrainConfig& cfg) {
  require(cfg.learning_rate >= 0.0, "train: learning_rate must be >= 0");
  require(cfg.momentum >= 0.0 && cfg.momentum < 1.0, "train: momentum must be in [0,1)");
  require(cfg.batch_size >= 1, "train: batch_size must be positive");
  require(cfg.total_steps >= 0, "train: total_steps must be >= 0");
  require(cfg.log_every >= 1, "train: log_every must be positive");
  std::int64_t prev = 0;
  for (std::int64_t b : cfg.schedule) {
    require(b > prev, "train: schedule boundaries must be strictly increasing");
    require(b <= cfg.total_steps, "train: schedule boundary exceeds total_steps");
    prev = b;
  }
}

namespace {

struct CheckpointEval {
  const Dataset& ds;
  const TrainConfig& cfg;
  std::vector<std::int32_t> clean_train, noisy_train, val;
  enum Tag : std::uint8_t { kNone = 0, kClean, kNoisy, kVal };
  std::vector<std::uint8_t> tag;

  CheckpointEval(const Dataset& d, const SplitSpec& split, const TrainConfig& c)
      : ds(d), cfg(c), tag(static_cast<std::size_t>(d.n), kNone) {
    for (std::int32_t i : split.train_indices) {
      (ds.noise_mask[i] ? noisy_train : clean_train).push_back(i);
      tag[i] = ds.noise_mask[i] ? kNoisy : kClean;
    }
    val = split.val_indices;
    for (std::int32_t i : val) tag[i] = kVal;
  }

  void run(const MlpModel& m, std::int64_t step, double lr, TrainingLog& log) const {
    Workspace<float> ws;
    ws.resize(m);
    std::vector<std::int32_t> preds(static_cast<std::size_t>(ds.n));
    double loss_clean = 0, acc_clean = 0, loss_noisy = 0, acc_noisy = 0;
    double loss_orig = 0, acc_orig = 0, loss_val = 0, acc_val = 0;

    // One pass over every row; partition sums accumulated in double.
    for (std::int64_t i = 0; i < ds.n; ++i) {
      forward(m, ds.row(i), ws);
      std::span<const float> logits{ws.pre.back().data(),
                                    static_cast<std::size_t>(m.num_classes())};
      preds[i] = static_cast<std::int32_t>(argmax_lowest(logits));
      switch (tag[i]) {
        case kClean:
          loss_clean += loss_value(cfg.loss, logits, ds.labels[i]);
          acc_clean += preds[i] == ds.labels[i] ? 1.0 : 0.0;
          break;
        case kNoisy:
          loss_noisy += loss_value(cfg.loss, logits, ds.labels[i]);
          acc_noisy += preds[i] == ds.labels[i] ? 1.0 : 0.0;
          loss_orig += loss_value(cfg.loss, logits, ds.original_labels[i]);
          acc_orig += preds[i] == ds.original_labels[i] ? 1.0 : 0.0;
          break;
        case kVal:
          loss_val += loss_value(cfg.loss, logits, ds.labels[i]);
          acc_val += preds[i] == ds.labels[i] ? 1.0 : 0.0;
          break;
        default:
          break;
      }
    }

    log.steps.push_back(step);
    log.lr.push_back(lr);
    log.predictions.push_back(std::move(preds));
    auto push = [](TrainingLog::Series& s, const std::vector<std::int32_t>& part,
                   double loss, double acc) {
      s.present = !part.empty();
      if (!s.present) return;
      const double inv = 1.0 / static_cast<double>(part.size());
      s.loss.push_back(loss * inv);
      s.acc.push_back(acc * inv);
    };
    push(log.clean_train, clean_train, loss_clean, acc_clean);
    push(log.noisy_train, noisy_train, loss_noisy, acc_noisy);
    push(log.noisy_vs_original, noisy_train, loss_orig, acc_orig);
    push(log.validation, val, loss_val, acc_val);
  }
};

}  // namespace

TrainResult train(const MlpModel& init, const Dataset& ds, const SplitSpec& split,
                  const TrainConfig& cfg) {
  validate_train_config(cfg);
  require(ds.d == init.input_dim(), "train: dataset dimension mismatch");
  require(ds.num_classes <= init.num_classes(), "train: class count mismatch");
  require(!split.train_indices.empty(), "train: empty training split");
  for (std::int32_t i : split.train_indices)
    require(i >= 0 && i < ds.n, "train: split index out of range");
  for (std::int32_t i : split.val_indices)
    require(i >= 0 && i < ds.n, "train: split index out of range");

  TrainResult res;
  res.model = init;
  MlpModel& m = res.model;

  std::vector<std::vector<float>> vel_w(m.weights.size()), vel_b(m.biases.size());
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    vel_w[l].assign(m.weights[l].size(), 0.0f);
    vel_b[l].assign(m.biases[l].size(), 0.0f);
  }

  const std::int64_t n_train = static_cast<std::int64_t>(split.train_indices.size());
  const std::int64_t batch =
      cfg.optimizer == Optimizer::full_batch_gd
          ? n_train
          : std::min<std::int64_t>(cfg.batch_size, n_train);

  std::vector<std::int32_t> perm = split.train_indices;
  std::int64_t cursor = n_train;  // forces an initial shuffle
  std::uint64_t epoch = 0;

  std::vector<float> xs(static_cast<std::size_t>(batch) * ds.d);
  std::vector<std::int32_t> ys(static_cast<std::size_t>(batch));
  Gradients grads;
  grads.resize_like(m);

  CheckpointEval eval(ds, split, cfg);
  double lr = cfg.learning_rate;
  std::size_t next_boundary = 0;
  auto checkpoint = [&](std::int64_t step) {
    try {
      eval.run(m, step, lr, res.log);
    } catch (const std::domain_error& e) {
      // blown-up parameters surface as non-finite logits at evaluation time
      throw DivergenceError(step, e.what());
    }
  };
  checkpoint(0);

  for (std::int64_t t = 1; t <= cfg.total_steps; ++t) {
    // Boundary b means "drop after completing b steps".
    while (next_boundary < cfg.schedule.size() && cfg.schedule[next_boundary] < t) {
      lr *= 0.2;
      ++next_boundary;
    }

    const std::int32_t* batch_idx;
    if (cfg.optimizer == Optimizer::full_batch_gd) {
      batch_idx = split.train_indices.data();
    } else {
      if (cursor + batch > n_train) {
        Rng rng(derive_seed(cfg.seed, "shuffle", epoch++));
        rng.shuffle(perm);
        cursor = 0;
      }
      batch_idx = perm.data() + cursor;
      cursor += batch;
    }
    for (std::int64_t i = 0; i < batch; ++i) {
      std::int32_t r = batch_idx[i];
      std::memcpy(xs.data() + i * ds.d, ds.features.data() + static_cast<std::int64_t>(r) * ds.d,
                  sizeof(float) * static_cast<std::size_t>(ds.d));
      ys[static_cast<std::size_t>(i)] = ds.labels[r];
    }

    grads.clear();
    double mean_loss;
    try {
      mean_loss = backward_batch(m, xs.data(), batch, ds.d, ys.data(), cfg.loss, grads);
    } catch (const std::domain_error& e) {
      throw DivergenceError(t, e.what());
    }
    if (!std::isfinite(mean_loss)) throw DivergenceError(t, "non-finite batch loss");

    // Classic momentum: v <- m*v - lr*g ; theta <- theta + v.
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
      float* w = m.weights[l].data();
      float* v = vel_w[l].data();
      const double* g = grads.w[l].data();
      for (std::size_t k = 0; k < m.weights[l].size(); ++k) {
        v[k] = static_cast<float>(cfg.momentum * v[k] - lr * g[k]);
        w[k] += v[k];
      }
      float* b = m.biases[l].data();
      float* vb = vel_b[l].data();
      const double* gb = grads.b[l].data();
      for (std::size_t k = 0; k < m.biases[l].size(); ++k) {
        vb[k] = static_cast<float>(cfg.momentum * vb[k] - lr * gb[k]);
        b[k] += vb[k];
      }
    }

    if (t % cfg.log_every == 0 || t == cfg.total_steps) checkpoint(t);
  }

  res.trace = capture_trace(m, ds);
  return res;
}

void save_model(const MlpModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  out.write("PDMLP1", 6);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(m.widths.size()));
  for (int w : m.widths) put_u32(out, static_cast<std::uint32_t>(w));
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    for (float w : m.weights[l]) put_f32(out, w);
    for (float b : m.biases[l]) put_f32(out, b);
  }
  if (!out) throw std::runtime_error("save_model: short write " + path);
}

MlpModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, "PDMLP1", 6) != 0)
    throw std::runtime_error("load_model: bad magic in " + path);
  std::uint16_t version = get_u16(in, "model version");
  if (version != 1)
    throw std::runtime_error("load_model: unsupported version " +
                             std::to_string(version) + " in " + path);
  std::uint32_t wc = get_u32(in, "width count");
  if (wc < 2 || wc > 64) throw std::runtime_error("load_model: invalid width count");
  std::vector<int> widths(wc);
  for (auto& w : widths) w = static_cast<int>(get_u32(in, "width"));
  MlpModel m;
  m.widths = widths;
  m.weights.resize(wc - 1);
  m.biases.resize(wc - 1);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    m.weights[l].resize(static_cast<std::size_t>(widths[l]) * widths[l + 1]);
    m.biases[l].resize(static_cast<std::size_t>(widths[l + 1]));
    get_f32_block(in, m.weights[l].data(), m.weights[l].size(), "model weights");
    get_f32_block(in, m.biases[l].data(), m.biases[l].size(), "model biases");
  }
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    for (float w : m.weights[l])
      if (!std::isfinite(w)) throw std::runtime_error("load_model: non-finite parameter");
    for (float b : m.biases[l])
      if (!std::isfinite(b)) throw std::runtime_error("load_model: non-finite parameter");
  }
  return m;
}

void save_trace(const EmbeddingTrace& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_trace: cannot open " + path);
  out.write("PDEMB1", 6);
  put_u32(out, static_cast<std::uint32_t>(t.probes.size()));
  for (std::size_t p = 0; p < t.probes.size(); ++p) {
    put_u32(out, static_cast<std::uint32_t>(t.rows));
    put_u32(out, static_cast<std::uint32_t>(t.dims[p]));
    for (float v : t.probes[p]) put_f32(out, v);
  }
  if (!out) throw std::runtime_error("save_trace: short write " + path);
}

EmbeddingTrace load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_trace: cannot open " + path);
  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, "PDEMB1", 6) != 0)
    throw std::runtime_error("load_trace: bad magic in " + path);
  std::uint32_t probes = get_u32(in, "probe count");
  if (probes == 0 || probes > 1024) throw std::runtime_error("load_trace: invalid probe count");
  EmbeddingTrace t;
  t.probes.resize(probes);
  t.dims.resize(probes);
  for (std::uint32_t p = 0; p < probes; ++p) {
    std::uint32_t rows = get_u32(in, "probe rows");
    std::uint32_t cols = get_u32(in, "probe cols");
    if (p == 0)
      t.rows = rows;
    else if (rows != static_cast<std::uint32_t>(t.rows))
      throw std::runtime_error("load_trace: inconsistent row counts");
    t.dims[p] = static_cast<int>(cols);
    t.probes[p].resize(static_cast<std::size_t>(rows) * cols);
    get_f32_block(in, t.probes[p].data(), t.probes[p].size(), "probe payload");
  }
  return t;
}

}  // namespace predepth
