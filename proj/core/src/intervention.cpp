#include <algorithm>
#include <filesystem>
#include <stdexcept>

#include "predepth/csv.hpp"
#include "predepth/margin.hpp"
#include "predepth/parallel.hpp"
#include "predepth/pipeline.hpp"
#include "predepth/prng.hpp"
#include "predepth/svg.hpp"

namespace fs = std::filesystem;

namespace predepth {

namespace {

TrainConfig cell_defaults(const std::string& name) {
  TrainConfig t;
  t.batch_size = 256;
  t.log_every = 250;
  if (name == "ce_sgd") {
    t.loss = Loss::cross_entropy;
    t.optimizer = Optimizer::sgd;
    t.learning_rate = 0.05;
    t.momentum = 0.9;
    t.total_steps = 3000;
    t.schedule = {1800, 2400};
  } else if (name == "ce_gd") {
    t.loss = Loss::cross_entropy;
    t.optimizer = Optimizer::full_batch_gd;
    t.learning_rate = 0.004;
    t.momentum = 0.9;
    t.total_steps = 2000;
    t.schedule = {1600};
  } else if (name == "zh_sgd") {
    t.loss = Loss::zero_hinge;
    t.optimizer = Optimizer::sgd;
    t.learning_rate = 0.05;
    t.momentum = 0.9;
    t.total_steps = 3000;
    t.schedule = {1800, 2400};
  } else if (name == "zh_gd") {
    t.loss = Loss::zero_hinge;
    t.optimizer = Optimizer::full_batch_gd;
    t.learning_rate = 0.02;
    t.momentum = 0.97;
    t.total_steps = 5000;
    t.schedule = {4200};
  } else {
    throw std::invalid_argument("intervention: unknown cell '" + name + "'");
  }
  return t;
}

}  // namespace

const InterventionCellResult& InterventionResult::cell(const std::string& name) const {
  for (const auto& c : cells)
    if (c.name == name) return c;
  throw std::invalid_argument("intervention: no cell named '" + name + "'");
}

InterventionOptions intervention_options_from_config(const Config& cfg) {
  std::vector<std::string> allowed = {
      "seed", "jobs", "split.val_fraction",
      "dataset.kind", "dataset.noise_fraction",
      "dataset.blobs.classes", "dataset.blobs.per_class", "dataset.blobs.dim",
      "dataset.blobs.center_scale", "dataset.blobs.sigma",
      "dataset.rings.classes", "dataset.rings.per_class",
      "dataset.rings.radius_gap", "dataset.rings.noise_sigma",
      "dataset.idx.images", "dataset.idx.labels",
      "model.hidden_layers", "model.hidden_width", "model.hidden_widths",
      "probe.k", "probe.self_mode",
  };
  for (const char* cell : {"ce_sgd", "ce_gd", "zh_sgd", "zh_gd"}) {
    for (const char* key : {"learning_rate", "momentum", "batch_size", "total_steps",
                            "schedule", "log_every"})
      allowed.push_back(std::string("intervention.") + cell + "." + key);
  }
  cfg.require_known_keys(allowed);

  InterventionOptions o;
  o.base_seed = cfg.get_u64("seed", 1);
  o.jobs = static_cast<int>(cfg.get_int("jobs", 0));
  o.val_fraction = cfg.get_double("split.val_fraction", 0.1);

  // Two faintly separated Gaussian classes in a high-dimensional space: the
  // raw-input k-NN probe is crippled by the dimension while the nets learn
  // the (nearly linear) rule and then memorize past it.
  DatasetSpec& d = o.dataset;
  d.kind = cfg.get_string("dataset.kind", "blobs");
  d.noise_fraction = cfg.get_double("dataset.noise_fraction", 0.0);
  d.blobs.classes = static_cast<int>(cfg.get_int("dataset.blobs.classes", 2));
  d.blobs.per_class = static_cast<int>(cfg.get_int("dataset.blobs.per_class", 2048));
  d.blobs.dim = static_cast<int>(cfg.get_int("dataset.blobs.dim", 40));
  d.blobs.center_scale = cfg.get_double("dataset.blobs.center_scale", 0.35);
  d.blobs.sigma = cfg.get_double("dataset.blobs.sigma", 1.0);
  d.rings.classes = static_cast<int>(cfg.get_int("dataset.rings.classes", 2));
  d.rings.per_class = static_cast<int>(cfg.get_int("dataset.rings.per_class", 2048));
  d.rings.radius_gap = cfg.get_double("dataset.rings.radius_gap", 1.0);
  d.rings.noise_sigma = cfg.get_double("dataset.rings.noise_sigma", 0.12);
  d.idx_images = cfg.get_string("dataset.idx.images", "");
  d.idx_labels = cfg.get_string("dataset.idx.labels", "");

  // Tapered by default: the narrowing funnel forces class structure to
  // consolidate inside the interior layers instead of only at the softmax,
  // which is what the per-layer probe comparison measures.
  if (cfg.has("model.hidden_widths")) {
    o.hidden_widths.clear();
    for (auto w : cfg.get_int_list("model.hidden_widths", {}))
      o.hidden_widths.push_back(static_cast<int>(w));
    if (o.hidden_widths.empty())
      throw std::runtime_error("intervention: model.hidden_widths is empty");
  } else if (cfg.has("model.hidden_layers") || cfg.has("model.hidden_width")) {
    const int hidden_layers = static_cast<int>(cfg.get_int("model.hidden_layers", 4));
    const int hidden_width = static_cast<int>(cfg.get_int("model.hidden_width", 96));
    o.hidden_widths.assign(static_cast<std::size_t>(hidden_layers), hidden_width);
  } else {
    o.hidden_widths = {128, 96, 64, 32};
  }

  o.probe.k = static_cast<int>(cfg.get_int("probe.k", kDefaultProbeK));
  o.probe.self_mode = cfg.get_string("probe.self_mode", "include") == "exclude"
                          ? SelfMode::exclude
                          : SelfMode::include;

  for (const char* name : {"ce_sgd", "ce_gd", "zh_sgd", "zh_gd"}) {
    InterventionCellSpec cell;
    cell.name = name;
    cell.train = cell_defaults(name);
    const std::string prefix = std::string("intervention.") + name + ".";
    cell.train.learning_rate = cfg.get_double(prefix + "learning_rate", cell.train.learning_rate);
    cell.train.momentum = cfg.get_double(prefix + "momentum", cell.train.momentum);
    cell.train.batch_size =
        static_cast<int>(cfg.get_int(prefix + "batch_size", cell.train.batch_size));
    cell.train.total_steps = cfg.get_int(prefix + "total_steps", cell.train.total_steps);
    cell.train.schedule = cfg.get_int_list(prefix + "schedule", cell.train.schedule);
    cell.train.log_every = cfg.get_int(prefix + "log_every", cell.train.log_every);
    o.cells.push_back(cell);
  }
  return o;
}

InterventionResult run_intervention(const InterventionOptions& opts,
                                    const std::string& out_dir) {
  Dataset ds = build_dataset(opts.dataset, opts.base_seed);
  if (ds.num_classes != 2)
    throw std::invalid_argument("intervention: a two-class dataset is required");
  const SplitSpec split =
      make_split(ds.n, opts.val_fraction, derive_seed(opts.base_seed, "split", 0));

  std::vector<int> widths;
  widths.push_back(ds.d);
  for (int w : opts.hidden_widths) widths.push_back(w);
  widths.push_back(ds.num_classes);
  const MlpModel init = init_model(widths, derive_seed(opts.base_seed, "init", 0));
  const int probes = init.probe_count();

  fs::create_directories(out_dir);

  InterventionResult result;
  result.cells.resize(opts.cells.size());
  parallel_for(static_cast<std::int64_t>(opts.cells.size()), opts.jobs,
               [&](std::int64_t ci) {
    const InterventionCellSpec& spec = opts.cells[ci];
    InterventionCellResult& out = result.cells[ci];
    out.name = spec.name;
    TrainConfig cfg = spec.train;
    cfg.seed = derive_seed(opts.base_seed, "train." + spec.name, 0);
    TrainResult res;
    try {
      res = train(init, ds, split, cfg);
    } catch (const DivergenceError& e) {
      out.diverged = true;
      out.diverged_step = e.step;
      return;
    }

    // Final accuracies and the mean output margin over the training split.
    Workspace<float> ws;
    ws.resize(res.model);
    std::int64_t train_hits = 0;
    double margin_sum = 0.0;
    for (std::int32_t i : split.train_indices) {
      forward(res.model, ds.row(i), ws);
      std::span<const float> logits{ws.pre.back().data(),
                                    static_cast<std::size_t>(res.model.num_classes())};
      train_hits += argmax_lowest(logits) == ds.labels[i] ? 1 : 0;
      margin_sum += output_margin(logits);
    }
    out.train_accuracy =
        static_cast<double>(train_hits) / static_cast<double>(split.train_indices.size());
    out.mean_output_margin = margin_sum / static_cast<double>(split.train_indices.size());
    std::int64_t val_hits = 0;
    for (std::int32_t i : split.val_indices) {
      forward(res.model, ds.row(i), ws);
      std::span<const float> logits{ws.pre.back().data(),
                                    static_cast<std::size_t>(res.model.num_classes())};
      val_hits += argmax_lowest(logits) == ds.labels[i] ? 1 : 0;
    }
    out.val_accuracy = split.val_indices.empty()
                           ? 0.0
                           : static_cast<double>(val_hits) /
                                 static_cast<double>(split.val_indices.size());

    // Per-layer probe accuracy on the training split.
    const auto& tr = split.train_indices;
    std::vector<std::int32_t> ref_labels(tr.size());
    for (std::size_t p = 0; p < tr.size(); ++p) ref_labels[p] = ds.labels[tr[p]];
    std::vector<std::int32_t> self_idx(tr.size());
    for (std::size_t p = 0; p < tr.size(); ++p) self_idx[p] = static_cast<std::int32_t>(p);
    out.probe_accuracy.resize(static_cast<std::size_t>(probes));
    for (int l = 0; l < probes; ++l) {
      const int dim = res.trace.dims[l];
      std::vector<float> refs(tr.size() * static_cast<std::size_t>(dim));
      for (std::size_t p = 0; p < tr.size(); ++p) {
        auto row = res.trace.at(l, tr[p]);
        std::copy(row.begin(), row.end(),
                  refs.begin() + static_cast<std::int64_t>(p) * dim);
      }
      ProbeIndex probe = build_probe(refs, static_cast<std::int64_t>(tr.size()), dim,
                                     ref_labels, opts.probe.k, l, ds.num_classes);
      out.probe_accuracy[l] =
          probe_accuracy(probe, refs, static_cast<std::int64_t>(tr.size()), ref_labels,
                         opts.probe.self_mode, self_idx, 1);
    }
    out.earliest_layer_90 = -1;
    for (int l = 0; l < probes; ++l) {
      if (out.probe_accuracy[l] >= 0.9 * out.train_accuracy) {
        out.earliest_layer_90 = l;
        break;
      }
    }
  });

  CsvWriter w;
  std::string head =
      "cell,loss,optimizer,diverged,train_accuracy,val_accuracy,mean_output_margin,"
      "earliest_layer_90";
  for (int l = 0; l < probes; ++l) head += ",p" + std::to_string(l);
  w.header(head);
  SvgPlot plot(680, 440, "Probe accuracy by layer across the 2x2 intervention grid",
               "probe layer", "train-split probe accuracy");
  const char* colors[4] = {"#4878cf", "#6acc64", "#e8a33d", "#d65f5f"};
  for (std::size_t ci = 0; ci < result.cells.size(); ++ci) {
    const auto& c = result.cells[ci];
    const auto& spec = opts.cells[ci];
    w.field(c.name);
    w.field(spec.train.loss == Loss::cross_entropy ? "cross_entropy" : "zero_hinge");
    w.field(spec.train.optimizer == Optimizer::sgd ? "sgd" : "full_batch_gd");
    w.field(c.diverged ? 1 : 0);
    if (c.diverged) {
      for (int pad = 0; pad < 4 + probes; ++pad) w.empty();
      w.end_row();
      continue;
    }
    w.field(c.train_accuracy);
    w.field(c.val_accuracy);
    w.field(c.mean_output_margin);
    w.field(c.earliest_layer_90);
    std::vector<double> xs, ys;
    for (int l = 0; l < probes; ++l) {
      w.field(c.probe_accuracy[l]);
      xs.push_back(static_cast<double>(l));
      ys.push_back(c.probe_accuracy[l]);
    }
    w.end_row();
    plot.add_line(xs, ys, colors[ci % 4], false, c.name);
  }
  write_text_file((fs::path(out_dir) / "intervention_report.csv").string(), w.str());
  write_text_file((fs::path(out_dir) / "intervention_curves.svg").string(), plot.render());
  return result;
}

}  // namespace predepth
