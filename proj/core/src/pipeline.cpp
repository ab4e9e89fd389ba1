#include "predepth/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "predepth/csv.hpp"
#include "predepth/parallel.hpp"
#include "predepth/prng.hpp"

namespace fs = std::filesystem;

namespace predepth {

int default_override_layer(int max_depth) { return (max_depth + 1) / 2; }

namespace {

std::string member_model_path(const std::string& dir, int i) {
  return (fs::path(dir) / "models" / (std::to_string(i) + ".pdmlp")).string();
}
std::string member_trace_path(const std::string& dir, int i) {
  return (fs::path(dir) / "embeddings" / (std::to_string(i) + ".pdemb")).string();
}
std::string member_log_path(const std::string& dir, int i) {
  return (fs::path(dir) / "logs" / (std::to_string(i) + ".csv")).string();
}
std::string member_probes_path(const std::string& dir, int i) {
  return (fs::path(dir) / "metrics" / ("probes_" + std::to_string(i) + ".csv")).string();
}
std::string member_depth_path(const std::string& dir, int i) {
  return (fs::path(dir) / "metrics" / ("depth_" + std::to_string(i) + ".csv")).string();
}

// Everything one member contributes to the ensemble table.
struct MemberData {
  bool diverged = false;
  std::int64_t diverged_step = -1;
  std::vector<std::uint8_t> was_val;
  std::vector<std::int32_t> final_pred;
  std::vector<std::uint8_t> depth_defined;
  std::vector<std::int32_t> depth;
  std::vector<std::int64_t> tau;
  std::vector<double> tau_rescaled;
  std::vector<std::vector<std::int32_t>> probe_preds;  // [probe][example]
};

std::vector<std::vector<std::int32_t>> compute_probe_predictions(
    const Dataset& ds, const SplitSpec& split, const EmbeddingTrace& trace,
    const ProbeConfig& pc, int jobs) {
  const auto& tr = split.train_indices;
  const int probes = trace.probe_count();
  std::vector<std::int64_t> ref_pos(static_cast<std::size_t>(ds.n), -1);
  for (std::size_t p = 0; p < tr.size(); ++p) ref_pos[tr[p]] = static_cast<std::int64_t>(p);
  std::vector<std::int32_t> ref_labels(tr.size());
  for (std::size_t p = 0; p < tr.size(); ++p) ref_labels[p] = ds.labels[tr[p]];

  std::vector<std::vector<std::int32_t>> preds(
      static_cast<std::size_t>(probes),
      std::vector<std::int32_t>(static_cast<std::size_t>(ds.n)));
  for (int l = 0; l < probes; ++l) {
    const int dim = trace.dims[l];
    std::vector<float> refs(tr.size() * static_cast<std::size_t>(dim));
    for (std::size_t p = 0; p < tr.size(); ++p) {
      auto row = trace.at(l, tr[p]);
      std::copy(row.begin(), row.end(), refs.begin() + static_cast<std::int64_t>(p) * dim);
    }
    ProbeIndex probe = build_probe(refs, static_cast<std::int64_t>(tr.size()), dim,
                                   ref_labels, pc.k, l, ds.num_classes);
    parallel_for(ds.n, jobs, [&](std::int64_t i) {
      std::int64_t excl = pc.self_mode == SelfMode::exclude ? ref_pos[i] : -1;
      preds[l][i] = probe.classify(trace.at(l, i), excl).predicted;
    });
  }
  return preds;
}

void fill_depth_and_tau(const Dataset& ds, const SplitSpec& split,
                        const TrainingLog& log,
                        const std::vector<std::vector<std::int32_t>>& probe_preds,
                        MemberData& md) {
  const std::int64_t n = ds.n;
  const int probes = static_cast<int>(probe_preds.size());
  md.was_val.assign(static_cast<std::size_t>(n), 0);
  for (std::int32_t i : split.val_indices) md.was_val[i] = 1;
  md.final_pred = log.predictions.back();
  md.depth_defined.assign(static_cast<std::size_t>(n), 0);
  md.depth.assign(static_cast<std::size_t>(n), -1);
  md.tau.assign(static_cast<std::size_t>(n), 0);

  std::vector<std::int32_t> seq(static_cast<std::size_t>(probes));
  std::vector<std::int32_t> tseq(log.steps.size());
  for (std::int64_t i = 0; i < n; ++i) {
    for (int l = 0; l < probes; ++l) seq[l] = probe_preds[l][i];
    DepthResult dr = prediction_depth(seq, md.final_pred[i]);
    md.depth_defined[i] = dr.defined ? 1 : 0;
    md.depth[i] = dr.depth;
    for (std::size_t c = 0; c < log.steps.size(); ++c) tseq[c] = log.predictions[c][i];
    md.tau[i] = iteration_learned(log.steps, tseq, md.final_pred[i]);
  }
  std::vector<double> taus(md.tau.begin(), md.tau.end());
  md.tau_rescaled = rescale_iterations(taus);
  md.probe_preds = probe_preds;
}

// ---- member CSV rendering (byte-stable; reused verbatim by verify) ----

std::string render_log_csv(const TrainingLog& log, std::int64_t n) {
  CsvWriter w;
  std::string head = "step,lr,loss_clean,acc_clean,loss_noisy,acc_noisy,loss_orig,acc_orig,loss_val,acc_val";
  for (std::int64_t i = 0; i < n; ++i) head += ",pred_" + std::to_string(i);
  w.header(head);
  auto put_series = [&](const TrainingLog::Series& s, std::size_t c) {
    if (s.present) {
      w.field(s.loss[c]);
      w.field(s.acc[c]);
    } else {
      w.empty();
      w.empty();
    }
  };
  for (std::size_t c = 0; c < log.steps.size(); ++c) {
    w.field(log.steps[c]);
    w.field(log.lr[c]);
    put_series(log.clean_train, c);
    put_series(log.noisy_train, c);
    put_series(log.noisy_vs_original, c);
    put_series(log.validation, c);
    for (std::int64_t i = 0; i < n; ++i) w.field(log.predictions[c][i]);
    w.end_row();
  }
  return w.str();
}

std::string render_probes_csv(const MemberData& md) {
  const int probes = static_cast<int>(md.probe_preds.size());
  CsvWriter w;
  std::string head = "id,split,final";
  for (int l = 0; l < probes; ++l) head += ",p" + std::to_string(l);
  w.header(head);
  for (std::size_t i = 0; i < md.final_pred.size(); ++i) {
    w.field(static_cast<std::int64_t>(i));
    w.field(md.was_val[i] ? "val" : "train");
    w.field(md.final_pred[i]);
    for (int l = 0; l < probes; ++l) w.field(md.probe_preds[l][i]);
    w.end_row();
  }
  return w.str();
}

std::string render_depth_csv(const MemberData& md) {
  CsvWriter w;
  w.header("id,split,depth,depth_defined,tau,tau_rescaled");
  for (std::size_t i = 0; i < md.final_pred.size(); ++i) {
    w.field(static_cast<std::int64_t>(i));
    w.field(md.was_val[i] ? "val" : "train");
    if (md.depth_defined[i])
      w.field(md.depth[i]);
    else
      w.empty();
    w.field(static_cast<int>(md.depth_defined[i]));
    w.field(md.tau[i]);
    w.field(md.tau_rescaled[i]);
    w.end_row();
  }
  return w.str();
}

std::string render_table_csv(const EnsembleTable& table) {
  CsvWriter w;
  w.header("id,truth,model,was_val,pred,depth_defined,depth,tau,tau_rescaled");
  for (std::size_t id = 0; id < table.rows.size(); ++id) {
    for (const Occurrence& o : table.rows[id]) {
      w.field(static_cast<std::int64_t>(id));
      w.field(table.truth[id]);
      w.field(o.model);
      w.field(o.was_val ? 1 : 0);
      w.field(o.pred);
      w.field(o.depth_defined ? 1 : 0);
      if (o.depth_defined)
        w.field(o.depth);
      else
        w.empty();
      w.field(o.tau);
      w.field(o.tau_rescaled);
      w.end_row();
    }
  }
  return w.str();
}

std::string render_profiles_csv(const std::vector<DifficultyProfile>& profiles) {
  CsvWriter w;
  w.header("id,truth,consensus,c_hat,c_star,entropy,mean_pd_val,mean_pd_train,mean_tau,corner");
  for (const auto& p : profiles) {
    w.field(p.id);
    w.field(p.truth);
    if (p.ensemble_defined) {
      w.field(p.consensus);
      w.field(p.c_hat);
      w.field(p.c_star);
      w.field(p.entropy);
    } else {
      w.empty();
      w.empty();
      w.empty();
      w.empty();
    }
    if (p.pd_val_defined)
      w.field(p.mean_pd_val);
    else
      w.empty();
    if (p.pd_train_defined)
      w.field(p.mean_pd_train);
    else
      w.empty();
    if (p.tau_defined)
      w.field(p.mean_tau);
    else
      w.empty();
    if (p.corner_defined)
      w.field(corner_name(p.corner));
    else
      w.empty();
    w.end_row();
  }
  return w.str();
}

// ---- member CSV parsing (resume + verify + analyses) ----

struct MemberLite {
  std::vector<std::uint8_t> was_val;
  std::vector<std::int32_t> final_pred;
  std::vector<std::uint8_t> depth_defined;
  std::vector<std::int32_t> depth;
  std::vector<std::int64_t> tau;
  std::vector<double> tau_rescaled;
};

MemberLite parse_member_csvs(const std::string& dir, int member, std::int64_t n) {
  MemberLite m;
  CsvTable probes = read_csv(member_probes_path(dir, member));
  CsvTable depth = read_csv(member_depth_path(dir, member));
  if (static_cast<std::int64_t>(probes.rows.size()) != n ||
      static_cast<std::int64_t>(depth.rows.size()) != n)
    throw std::runtime_error("member csv: row count mismatch");
  const int c_split = probes.column("split");
  const int c_final = probes.column("final");
  const int c_depth = depth.column("depth");
  const int c_def = depth.column("depth_defined");
  const int c_tau = depth.column("tau");
  const int c_rt = depth.column("tau_rescaled");
  m.was_val.resize(static_cast<std::size_t>(n));
  m.final_pred.resize(static_cast<std::size_t>(n));
  m.depth_defined.resize(static_cast<std::size_t>(n));
  m.depth.resize(static_cast<std::size_t>(n));
  m.tau.resize(static_cast<std::size_t>(n));
  m.tau_rescaled.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& pr = probes.rows[static_cast<std::size_t>(i)];
    const auto& dr = depth.rows[static_cast<std::size_t>(i)];
    m.was_val[i] = pr[c_split] == "val" ? 1 : 0;
    m.final_pred[i] = static_cast<std::int32_t>(std::stol(pr[c_final]));
    m.depth_defined[i] = static_cast<std::uint8_t>(std::stoi(dr[c_def]));
    m.depth[i] = m.depth_defined[i] ? static_cast<std::int32_t>(std::stol(dr[c_depth])) : -1;
    m.tau[i] = std::stoll(dr[c_tau]);
    m.tau_rescaled[i] = std::strtod(dr[c_rt].c_str(), nullptr);
  }
  return m;
}

EnsembleTable assemble_table(const Dataset& ds, int max_depth,
                             const std::vector<int>& members,
                             const std::vector<MemberLite>& lites) {
  EnsembleTable t;
  t.num_classes = ds.num_classes;
  t.max_depth = max_depth;
  t.truth = ds.labels;
  t.rows.resize(static_cast<std::size_t>(ds.n));
  for (std::size_t mi = 0; mi < members.size(); ++mi) {
    const MemberLite& m = lites[mi];
    for (std::int64_t i = 0; i < ds.n; ++i) {
      Occurrence o;
      o.model = members[mi];
      o.was_val = m.was_val[i] != 0;
      o.pred = m.final_pred[i];
      o.depth_defined = m.depth_defined[i] != 0;
      o.depth = m.depth[i];
      o.tau = m.tau[i];
      o.tau_rescaled = m.tau_rescaled[i];
      t.rows[i].push_back(o);
    }
  }
  return t;
}

struct LogsLite {
  std::vector<std::int64_t> steps;
  std::vector<std::vector<std::int32_t>> preds;  // [ckpt][example]
  // partition accuracy columns, NaN when absent
  std::vector<double> acc_clean, acc_noisy, acc_orig, acc_val;
};

LogsLite parse_log_csv(const std::string& path, std::int64_t n) {
  CsvTable t = read_csv(path);
  if (static_cast<std::int64_t>(t.header.size()) != 10 + n)
    throw std::runtime_error("log csv: column count mismatch in " + path);
  LogsLite l;
  auto opt = [](const std::string& s) {
    return s.empty() ? std::nan("") : std::strtod(s.c_str(), nullptr);
  };
  for (const auto& row : t.rows) {
    l.steps.push_back(std::stoll(row[0]));
    l.acc_clean.push_back(opt(row[3]));
    l.acc_noisy.push_back(opt(row[5]));
    l.acc_orig.push_back(opt(row[7]));
    l.acc_val.push_back(opt(row[9]));
    std::vector<std::int32_t> preds(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
      preds[i] = static_cast<std::int32_t>(std::stol(row[10 + i]));
    l.preds.push_back(std::move(preds));
  }
  return l;
}

void add_file(RunManifest& m, const std::string& run_dir, const std::string& rel) {
  const std::string full = (fs::path(run_dir) / rel).string();
  FileEntry e;
  e.path = rel;
  e.bytes = static_cast<std::uint64_t>(fs::file_size(full));
  e.digest = file_digest(full);
  m.files.push_back(e);
}

}  // namespace

EnsembleOptions ensemble_options_from_config(const Config& cfg) {
  cfg.require_known_keys({
      "seed", "ensemble.size", "split.val_fraction", "jobs",
      "dataset.kind", "dataset.noise_fraction",
      "dataset.blobs.classes", "dataset.blobs.per_class", "dataset.blobs.dim",
      "dataset.blobs.center_scale", "dataset.blobs.sigma",
      "dataset.rings.classes", "dataset.rings.per_class",
      "dataset.rings.radius_gap", "dataset.rings.noise_sigma",
      "dataset.idx.images", "dataset.idx.labels",
      "model.hidden_layers", "model.hidden_width",
      "train.loss", "train.optimizer", "train.learning_rate", "train.momentum",
      "train.batch_size", "train.schedule", "train.total_steps", "train.log_every",
      "probe.k", "probe.self_mode", "override.layer",
  });

  EnsembleOptions opts;
  RunManifest& m = opts.manifest;
  m.base_seed = cfg.get_u64("seed", 1);
  m.ensemble_size = static_cast<int>(cfg.get_int("ensemble.size", 25));
  m.val_fraction = cfg.get_double("split.val_fraction", 0.1);
  opts.jobs = static_cast<int>(cfg.get_int("jobs", 0));
  if (m.ensemble_size < 1) throw std::runtime_error("config: ensemble.size must be >= 1");

  DatasetSpec& d = m.dataset;
  d.kind = cfg.get_string("dataset.kind", "blobs+rings");
  d.noise_fraction = cfg.get_double("dataset.noise_fraction", 0.2);
  d.blobs.classes = static_cast<int>(cfg.get_int("dataset.blobs.classes", 10));
  d.blobs.per_class = static_cast<int>(cfg.get_int("dataset.blobs.per_class", 500));
  d.blobs.dim = static_cast<int>(cfg.get_int("dataset.blobs.dim", 16));
  d.blobs.center_scale = cfg.get_double("dataset.blobs.center_scale", 2.6);
  d.blobs.sigma = cfg.get_double("dataset.blobs.sigma", 1.0);
  d.rings.classes = static_cast<int>(cfg.get_int("dataset.rings.classes", 2));
  d.rings.per_class = static_cast<int>(cfg.get_int("dataset.rings.per_class", 250));
  d.rings.radius_gap = cfg.get_double("dataset.rings.radius_gap", 1.0);
  d.rings.noise_sigma = cfg.get_double("dataset.rings.noise_sigma", 0.12);
  d.idx_images = cfg.get_string("dataset.idx.images", "");
  d.idx_labels = cfg.get_string("dataset.idx.labels", "");

  const int hidden_layers = static_cast<int>(cfg.get_int("model.hidden_layers", 4));
  const int hidden_width = static_cast<int>(cfg.get_int("model.hidden_width", 128));
  if (hidden_layers < 1 || hidden_width < 1)
    throw std::runtime_error("config: invalid model shape");
  m.model_widths.clear();  // input/output resolved once the dataset is built
  for (int h = 0; h < hidden_layers; ++h) m.model_widths.push_back(hidden_width);

  TrainConfig& t = m.train;
  const std::string loss = cfg.get_string("train.loss", "cross_entropy");
  if (loss == "cross_entropy")
    t.loss = Loss::cross_entropy;
  else if (loss == "zero_hinge")
    t.loss = Loss::zero_hinge;
  else
    throw std::runtime_error("config: unknown train.loss '" + loss + "'");
  const std::string optim = cfg.get_string("train.optimizer", "sgd");
  if (optim == "sgd")
    t.optimizer = Optimizer::sgd;
  else if (optim == "full_batch_gd")
    t.optimizer = Optimizer::full_batch_gd;
  else
    throw std::runtime_error("config: unknown train.optimizer '" + optim + "'");
  t.learning_rate = cfg.get_double("train.learning_rate", 0.04);
  t.momentum = cfg.get_double("train.momentum", 0.9);
  t.batch_size = static_cast<int>(cfg.get_int("train.batch_size", 256));
  t.total_steps = cfg.get_int("train.total_steps", 1500);
  t.schedule = cfg.get_int_list("train.schedule", {900, 1250});
  t.log_every = cfg.get_int("train.log_every", 15);

  m.probe.k = static_cast<int>(cfg.get_int("probe.k", kDefaultProbeK));
  const std::string sm = cfg.get_string("probe.self_mode", "include");
  if (sm == "include")
    m.probe.self_mode = SelfMode::include;
  else if (sm == "exclude")
    m.probe.self_mode = SelfMode::exclude;
  else
    throw std::runtime_error("config: unknown probe.self_mode '" + sm + "'");
  m.policy.override_layer = static_cast<int>(cfg.get_int("override.layer", 0));
  return opts;
}

void run_ensemble(const EnsembleOptions& opts, const std::string& out_dir) {
  RunManifest manifest = opts.manifest;
  Dataset ds = build_dataset(manifest.dataset, manifest.base_seed);
  manifest.dataset_rows = ds.n;
  manifest.dataset_dim = ds.d;
  manifest.dataset_classes = ds.num_classes;

  // The options carry hidden widths only; resolve the full chain now that
  // the dataset shape is known.
  std::vector<int> widths;
  widths.reserve(manifest.model_widths.size() + 2);
  widths.push_back(ds.d);
  for (int w : manifest.model_widths) widths.push_back(w);
  widths.push_back(ds.num_classes);
  manifest.model_widths = widths;
  const int max_depth = static_cast<int>(widths.size()) - 1;  // L
  if (manifest.policy.override_layer <= 0)
    manifest.policy.override_layer = default_override_layer(max_depth);
  if (manifest.policy.override_layer >= max_depth)
    throw std::runtime_error("override layer must be an interior probe");

  fs::create_directories(fs::path(out_dir) / "models");
  fs::create_directories(fs::path(out_dir) / "embeddings");
  fs::create_directories(fs::path(out_dir) / "logs");
  fs::create_directories(fs::path(out_dir) / "metrics");

  // Config echo guards resumption against a mismatched directory.
  {
    RunManifest echo = manifest;
    echo.files.clear();
    echo.diverged_members.clear();
    echo.occurrence_count = 0;
    echo.undefined_depth_count = 0;
    const std::string text = manifest_to_json(echo);
    const std::string path = (fs::path(out_dir) / "config.json").string();
    if (fs::exists(path)) {
      if (read_text_file(path) != text)
        throw std::runtime_error(
            "run_ensemble: " + out_dir + " was created with a different configuration");
    } else {
      write_text_file(path, text);
    }
  }

  // Completed run: nothing to do.
  if (fs::exists(fs::path(out_dir) / "manifest.json")) {
    RunManifest existing = read_manifest(out_dir);
    if (verify_files(out_dir, existing).ok) return;
  }

  {
    std::ostringstream ss;
    write_dataset_csv(ds, ss);
    write_text_file((fs::path(out_dir) / "dataset.csv").string(), ss.str());
  }

  const int r = manifest.ensemble_size;
  const int jobs = resolve_jobs(opts.jobs);
  const int member_jobs = std::min(jobs, r);
  const int inner_jobs = member_jobs > 1 ? 1 : jobs;

  std::vector<MemberData> data(static_cast<std::size_t>(r));
  parallel_for(r, member_jobs, [&](std::int64_t mi) {
    const int i = static_cast<int>(mi);
    MemberData& md = data[i];
    const SplitSpec split =
        make_split(ds.n, manifest.val_fraction,
                   derive_seed(manifest.base_seed, "split", static_cast<std::uint64_t>(i)));

    // Reuse a member whose artifacts all load; determinism makes the cached
    // bytes identical to a retrain.
    try {
      (void)load_model(member_model_path(out_dir, i));
      (void)parse_log_csv(member_log_path(out_dir, i), ds.n);
      EmbeddingTrace cached = load_trace(member_trace_path(out_dir, i));
      if (cached.rows != ds.n) throw std::runtime_error("stale trace");
      MemberLite lite = parse_member_csvs(out_dir, i, ds.n);
      md.was_val = lite.was_val;
      md.final_pred = lite.final_pred;
      md.depth_defined = lite.depth_defined;
      md.depth = lite.depth;
      md.tau = lite.tau;
      md.tau_rescaled = lite.tau_rescaled;
      return;
    } catch (const std::exception&) {
      // fall through to a fresh train
    }

    MlpModel model = init_model(
        manifest.model_widths,
        derive_seed(manifest.base_seed, "init", static_cast<std::uint64_t>(i)));
    TrainConfig cfg = manifest.train;
    cfg.seed = derive_seed(manifest.base_seed, "train", static_cast<std::uint64_t>(i));
    TrainResult res;
    try {
      res = train(model, ds, split, cfg);
    } catch (const DivergenceError& e) {
      md.diverged = true;
      md.diverged_step = e.step;
      return;
    }
    auto preds = compute_probe_predictions(ds, split, res.trace, manifest.probe, inner_jobs);
    fill_depth_and_tau(ds, split, res.log, preds, md);

    save_model(res.model, member_model_path(out_dir, i));
    save_trace(res.trace, member_trace_path(out_dir, i));
    write_text_file(member_log_path(out_dir, i), render_log_csv(res.log, ds.n));
    write_text_file(member_probes_path(out_dir, i), render_probes_csv(md));
    write_text_file(member_depth_path(out_dir, i), render_depth_csv(md));
    md.probe_preds.clear();
  });

  std::vector<int> members;
  std::vector<MemberLite> lites;
  for (int i = 0; i < r; ++i) {
    if (data[i].diverged) {
      manifest.diverged_members.push_back(i);
      continue;
    }
    members.push_back(i);
    MemberLite lite;
    lite.was_val = std::move(data[i].was_val);
    lite.final_pred = std::move(data[i].final_pred);
    lite.depth_defined = std::move(data[i].depth_defined);
    lite.depth = std::move(data[i].depth);
    lite.tau = std::move(data[i].tau);
    lite.tau_rescaled = std::move(data[i].tau_rescaled);
    lites.push_back(std::move(lite));
  }

  EnsembleTable table = assemble_table(ds, max_depth, members, lites);
  manifest.occurrence_count = static_cast<std::int64_t>(members.size()) * ds.n;
  for (const auto& lite : lites)
    for (std::uint8_t def : lite.depth_defined) manifest.undefined_depth_count += def ? 0 : 1;

  write_text_file((fs::path(out_dir) / "metrics" / "ensemble_table.csv").string(),
                  render_table_csv(table));
  write_text_file((fs::path(out_dir) / "metrics" / "profiles.csv").string(),
                  render_profiles_csv(build_profiles(table)));

  manifest.files.clear();
  add_file(manifest, out_dir, "dataset.csv");
  for (int i : members) {
    add_file(manifest, out_dir, "models/" + std::to_string(i) + ".pdmlp");
    add_file(manifest, out_dir, "embeddings/" + std::to_string(i) + ".pdemb");
    add_file(manifest, out_dir, "logs/" + std::to_string(i) + ".csv");
    add_file(manifest, out_dir, "metrics/probes_" + std::to_string(i) + ".csv");
    add_file(manifest, out_dir, "metrics/depth_" + std::to_string(i) + ".csv");
  }
  add_file(manifest, out_dir, "metrics/ensemble_table.csv");
  add_file(manifest, out_dir, "metrics/profiles.csv");
  write_manifest(out_dir, manifest);
}

RunData load_run(const std::string& run_dir) {
  RunData run;
  run.dir = run_dir;
  run.manifest = read_manifest(run_dir);
  {
    std::ifstream in((fs::path(run_dir) / "dataset.csv").string());
    if (!in) throw std::runtime_error("load_run: missing dataset.csv");
    run.dataset = read_dataset_csv(in);
    run.dataset.num_classes = run.manifest.dataset_classes;
  }
  run.max_depth = static_cast<int>(run.manifest.model_widths.size()) - 1;
  for (int i = 0; i < run.manifest.ensemble_size; ++i) {
    if (std::find(run.manifest.diverged_members.begin(),
                  run.manifest.diverged_members.end(),
                  i) == run.manifest.diverged_members.end())
      run.members.push_back(i);
  }

  CsvTable t = read_csv((fs::path(run_dir) / "metrics" / "ensemble_table.csv").string());
  run.table.num_classes = run.dataset.num_classes;
  run.table.max_depth = run.max_depth;
  run.table.truth = run.dataset.labels;
  run.table.rows.resize(static_cast<std::size_t>(run.dataset.n));
  const int c_id = t.column("id"), c_model = t.column("model"),
            c_val = t.column("was_val"), c_pred = t.column("pred"),
            c_dd = t.column("depth_defined"), c_depth = t.column("depth"),
            c_tau = t.column("tau"), c_rt = t.column("tau_rescaled");
  for (const auto& row : t.rows) {
    Occurrence o;
    const std::int64_t id = std::stoll(row[c_id]);
    o.model = static_cast<std::int32_t>(std::stol(row[c_model]));
    o.was_val = row[c_val] == "1";
    o.pred = static_cast<std::int32_t>(std::stol(row[c_pred]));
    o.depth_defined = row[c_dd] == "1";
    o.depth = o.depth_defined ? static_cast<std::int32_t>(std::stol(row[c_depth])) : -1;
    o.tau = std::stoll(row[c_tau]);
    o.tau_rescaled = std::strtod(row[c_rt].c_str(), nullptr);
    run.table.rows[id].push_back(o);
  }
  run.profiles = build_profiles(run.table);
  return run;
}

MemberProbePreds load_member_probes(const RunData& run, int member) {
  CsvTable t = read_csv(member_probes_path(run.dir, member));
  const std::int64_t n = run.dataset.n;
  if (static_cast<std::int64_t>(t.rows.size()) != n)
    throw std::runtime_error("probes csv: row count mismatch");
  const int probes = run.max_depth + 1;
  MemberProbePreds mp;
  mp.was_val.resize(static_cast<std::size_t>(n));
  mp.final_pred.resize(static_cast<std::size_t>(n));
  mp.probe_preds.assign(static_cast<std::size_t>(probes),
                        std::vector<std::int32_t>(static_cast<std::size_t>(n)));
  const int c_split = t.column("split");
  const int c_final = t.column("final");
  const int c_p0 = t.column("p0");
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    mp.was_val[i] = row[c_split] == "val" ? 1 : 0;
    mp.final_pred[i] = static_cast<std::int32_t>(std::stol(row[c_final]));
    for (int l = 0; l < probes; ++l)
      mp.probe_preds[l][i] = static_cast<std::int32_t>(std::stol(row[c_p0 + l]));
  }
  return mp;
}

VerifyReport verify_run(const std::string& run_dir) {
  VerifyReport report;
  RunManifest manifest;
  try {
    manifest = read_manifest(run_dir);
  } catch (const std::exception& e) {
    report.add("read_error", "manifest.json", e.what());
    return report;
  }
  report = verify_files(run_dir, manifest);
  if (!report.ok) return report;

  Dataset ds;
  try {
    std::ifstream in((fs::path(run_dir) / "dataset.csv").string());
    ds = read_dataset_csv(in);
    ds.num_classes = manifest.dataset_classes;
    if (ds.n != manifest.dataset_rows || ds.d != manifest.dataset_dim)
      throw std::runtime_error("dataset shape disagrees with manifest");
  } catch (const std::exception& e) {
    report.add("read_error", "dataset.csv", e.what());
    return report;
  }

  std::vector<int> members;
  for (int i = 0; i < manifest.ensemble_size; ++i)
    if (std::find(manifest.diverged_members.begin(), manifest.diverged_members.end(), i) ==
        manifest.diverged_members.end())
      members.push_back(i);
  if (members.empty()) return report;

  // Re-derive one member's metric CSVs from its binary artifacts.
  const int pick = members[derive_seed(manifest.base_seed, "verify", 0) % members.size()];
  try {
    const SplitSpec split =
        make_split(ds.n, manifest.val_fraction,
                   derive_seed(manifest.base_seed, "split", static_cast<std::uint64_t>(pick)));
    EmbeddingTrace trace = load_trace(member_trace_path(run_dir, pick));
    LogsLite logs = parse_log_csv(member_log_path(run_dir, pick), ds.n);
    TrainingLog log;
    log.steps = logs.steps;
    log.predictions = logs.preds;
    auto preds = compute_probe_predictions(ds, split, trace, manifest.probe, 0);
    MemberData md;
    fill_depth_and_tau(ds, split, log, preds, md);
    if (render_probes_csv(md) != read_text_file(member_probes_path(run_dir, pick)))
      report.add("rederivation_mismatch", "metrics/probes_" + std::to_string(pick) + ".csv",
                 "recomputed probe predictions differ from stored CSV");
    if (render_depth_csv(md) != read_text_file(member_depth_path(run_dir, pick)))
      report.add("rederivation_mismatch", "metrics/depth_" + std::to_string(pick) + ".csv",
                 "recomputed depth/tau rows differ from stored CSV");
  } catch (const std::exception& e) {
    report.add("read_error", "member " + std::to_string(pick), e.what());
    return report;
  }

  // Re-derive the cross-ensemble CSVs from the per-member CSVs.
  try {
    std::vector<MemberLite> lites;
    for (int i : members) lites.push_back(parse_member_csvs(run_dir, i, ds.n));
    const int max_depth = static_cast<int>(manifest.model_widths.size()) - 1;
    EnsembleTable table = assemble_table(ds, max_depth, members, lites);
    if (render_table_csv(table) !=
        read_text_file((fs::path(run_dir) / "metrics" / "ensemble_table.csv").string()))
      report.add("rederivation_mismatch", "metrics/ensemble_table.csv",
                 "reassembled table differs from stored CSV");
    if (render_profiles_csv(build_profiles(table)) !=
        read_text_file((fs::path(run_dir) / "metrics" / "profiles.csv").string()))
      report.add("rederivation_mismatch", "metrics/profiles.csv",
                 "recomputed profiles differ from stored CSV");
  } catch (const std::exception& e) {
    report.add("read_error", "metrics", e.what());
  }
  return report;
}

}  // namespace predepth
