#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "predepth/csv.hpp"
#include "predepth/pipeline.hpp"
#include "predepth/svg.hpp"

using namespace predepth;
namespace fs = std::filesystem;

namespace {

// Minimal well-formedness check: tags balance and attribute quotes close.
bool xml_well_formed(const std::string& text) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  if (text.rfind("<?xml", 0) == 0) i = text.find("?>");
  if (i == std::string::npos) return false;
  while ((i = text.find('<', i)) != std::string::npos) {
    std::size_t end = text.find('>', i);
    if (end == std::string::npos) return false;
    std::string tag = text.substr(i + 1, end - i - 1);
    if (!tag.empty() && tag[0] == '?') {
      i = end + 1;
      continue;
    }
    bool closing = !tag.empty() && tag[0] == '/';
    bool self_closing = !tag.empty() && tag.back() == '/';
    std::string name = tag.substr(closing ? 1 : 0);
    name = name.substr(0, name.find_first_of(" \t\n/"));
    if (closing) {
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
    } else if (!self_closing) {
      stack.push_back(name);
    }
    i = end + 1;
  }
  return stack.empty();
}

Config tiny_config(std::uint64_t seed, int r) {
  Config cfg;
  cfg.set("seed", std::to_string(seed));
  cfg.set("ensemble.size", std::to_string(r));
  cfg.set("jobs", "2");
  cfg.set("dataset.blobs.classes", "4");
  cfg.set("dataset.blobs.per_class", "50");
  cfg.set("dataset.blobs.dim", "6");
  cfg.set("dataset.blobs.center_scale", "2.0");
  cfg.set("dataset.rings.per_class", "25");
  cfg.set("dataset.noise_fraction", "0.2");
  cfg.set("model.hidden_layers", "3");
  cfg.set("model.hidden_width", "24");
  cfg.set("train.total_steps", "250");
  cfg.set("train.schedule", "150,210");
  cfg.set("train.log_every", "10");
  return cfg;
}

std::string slurp(const std::string& path) { return read_text_file(path); }

}  // namespace

TEST_CASE("ensemble run end to end: verify, reread, idempotence, determinism") {
  const std::string dir_a = "test_tmp_run_a";
  const std::string dir_b = "test_tmp_run_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  EnsembleOptions opts = ensemble_options_from_config(tiny_config(77, 4));
  run_ensemble(opts, dir_a);

  auto report = verify_run(dir_a);
  for (const auto& issue : report.issues)
    MESSAGE(issue.kind, " ", issue.file, " ", issue.detail);
  CHECK(report.ok);

  RunData run = load_run(dir_a);
  CHECK(run.members.size() == 4);
  CHECK(run.dataset.n == 4 * 50 + 2 * 25);
  CHECK(run.max_depth == 4);  // 3 hidden layers -> probes 0..4
  CHECK(run.table.rows.size() == static_cast<std::size_t>(run.dataset.n));
  for (const auto& row : run.table.rows) CHECK(row.size() == 4);

  // every analysis emits a parsable CSV and well-formed SVG
  AnalyzeOptions aopts;
  aopts.jobs = 2;
  aopts.corner_count = 10;
  for (const std::string name : {"depth_hist", "consistency", "trend", "corners",
                                 "margins", "curves", "ksweep"}) {
    run_analysis(dir_a, name, aopts);
    CHECK(!read_csv(dir_a + "/metrics/" + name + ".csv").rows.empty());
    CHECK(xml_well_formed(slurp(dir_a + "/metrics/" + name + ".svg")));
  }

  // rerunning in place retrains nothing and leaves every byte alone
  const std::string manifest_before = slurp(dir_a + "/manifest.json");
  run_ensemble(opts, dir_a);
  CHECK(slurp(dir_a + "/manifest.json") == manifest_before);

  // a fresh directory reproduces the identical manifest and metric tables
  run_ensemble(opts, dir_b);
  CHECK(slurp(dir_b + "/manifest.json") == manifest_before);
  CHECK(slurp(dir_b + "/metrics/profiles.csv") == slurp(dir_a + "/metrics/profiles.csv"));
  CHECK(slurp(dir_b + "/metrics/ensemble_table.csv") ==
        slurp(dir_a + "/metrics/ensemble_table.csv"));

  // analyses are pure functions of the stored artifacts
  run_analysis(dir_b, "trend", aopts);
  CHECK(slurp(dir_b + "/metrics/trend.csv") == slurp(dir_a + "/metrics/trend.csv"));

  // a different seed must not reuse the directory silently
  EnsembleOptions other = ensemble_options_from_config(tiny_config(78, 4));
  CHECK_THROWS_WITH_AS(run_ensemble(other, dir_a),
                       doctest::Contains("different configuration"), std::runtime_error);
}

TEST_CASE("verify_run pinpoints a tampered artifact") {
  const std::string dir = "test_tmp_run_tamper";
  fs::remove_all(dir);
  run_ensemble(ensemble_options_from_config(tiny_config(5, 2)), dir);

  // flip one byte inside an embedding payload
  {
    std::fstream f(dir + "/embeddings/1.pdemb",
                   std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(64);
    char c;
    f.seekg(64);
    f.get(c);
    f.seekp(64);
    f.put(static_cast<char>(c ^ 0x40));
  }
  auto report = verify_run(dir);
  REQUIRE(!report.ok);
  REQUIRE(report.issues.size() == 1);
  CHECK(report.issues[0].kind == "digest_mismatch");
  CHECK(report.issues[0].file == "embeddings/1.pdemb");
}

TEST_CASE("member divergence is recorded and the run continues") {
  Config cfg = tiny_config(9, 3);
  cfg.set("train.learning_rate", "1e25");
  cfg.set("train.schedule", "");
  const std::string dir = "test_tmp_run_diverge";
  fs::remove_all(dir);
  run_ensemble(ensemble_options_from_config(cfg), dir);
  RunManifest m = read_manifest(dir);
  CHECK(m.diverged_members.size() == 3);
  CHECK(verify_run(dir).ok);  // manifest flags them; nothing else is broken
}

TEST_CASE("single-member ensemble is a degenerate but valid run") {
  const std::string dir = "test_tmp_run_single";
  fs::remove_all(dir);
  run_ensemble(ensemble_options_from_config(tiny_config(31, 1)), dir);
  RunData run = load_run(dir);
  CHECK(run.members.size() == 1);
  for (const auto& row : run.table.rows) CHECK(row.size() == 1);
  CHECK(verify_run(dir).ok);
}

TEST_CASE("ensemble config: defaults, overrides and typo guard") {
  Config cfg;
  EnsembleOptions opts = ensemble_options_from_config(cfg);
  CHECK(opts.manifest.ensemble_size == 25);
  CHECK(opts.manifest.val_fraction == 0.1);
  CHECK(opts.manifest.probe.k == 30);
  CHECK(opts.manifest.train.log_every == 15);
  CHECK(opts.manifest.dataset.kind == "blobs+rings");

  cfg.set("probe.k", "10");
  cfg.set("train.loss", "zero_hinge");
  opts = ensemble_options_from_config(cfg);
  CHECK(opts.manifest.probe.k == 10);
  CHECK(opts.manifest.train.loss == Loss::zero_hinge);

  cfg.set("train.lass", "oops");
  CHECK_THROWS_WITH_AS((void)ensemble_options_from_config(cfg),
                       doctest::Contains("unknown key"), std::runtime_error);
}

TEST_CASE("config parser grammar") {
  Config cfg = Config::parse_text("# comment\n a = 1 \n\nb.c = hello world\n");
  CHECK(cfg.get_int("a", 0) == 1);
  CHECK(cfg.get_string("b.c", "") == "hello world");
  CHECK(cfg.get_int("missing", 42) == 42);
  CHECK_THROWS_AS(Config::parse_text("not a pair\n"), std::runtime_error);
  CHECK_THROWS_AS((void)Config::parse_text("a = x\n").get_int("a", 0), std::exception);
  auto list = Config::parse_text("s = 10, 20,30\n").get_int_list("s", {});
  CHECK(list == std::vector<std::int64_t>{10, 20, 30});
}

TEST_CASE("corner override summary and ksweep run on a stored ensemble") {
  const std::string dir = "test_tmp_run_helpers";
  fs::remove_all(dir);
  run_ensemble(ensemble_options_from_config(tiny_config(13, 3)), dir);
  RunData run = load_run(dir);

  auto summary = corner_override_summary(run, Corner::easy, 20,
                                         run.manifest.policy.override_layer);
  CHECK(summary.ids.size() <= 20);
  if (summary.occurrences > 0) {
    CHECK(summary.model_accuracy >= 0.0);
    CHECK(summary.probe_accuracy <= 1.0);
  }

  auto rows = ksweep_accuracies(run, {3, 10}, 2);
  CHECK(rows.size() == static_cast<std::size_t>(2 * (run.max_depth + 1)));
  for (const auto& r : rows) {
    CHECK(r.train_defined);
    CHECK(r.acc_train >= 0.0);
    CHECK(r.acc_train <= 1.0);
  }
}

TEST_CASE("intervention: smoke run produces the 2x2 grid") {
  Config cfg;
  cfg.set("seed", "7");
  cfg.set("jobs", "2");
  cfg.set("dataset.blobs.per_class", "150");
  cfg.set("dataset.blobs.dim", "4");
  cfg.set("dataset.blobs.center_scale", "0.8");
  cfg.set("model.hidden_layers", "3");
  cfg.set("model.hidden_width", "16");
  for (const std::string cell : {"ce_sgd", "ce_gd", "zh_sgd", "zh_gd"}) {
    cfg.set("intervention." + cell + ".total_steps", "150");
    cfg.set("intervention." + cell + ".schedule", "100");
  }
  InterventionOptions opts = intervention_options_from_config(cfg);
  const std::string dir = "test_tmp_intervention";
  fs::remove_all(dir);
  InterventionResult res = run_intervention(opts, dir);
  REQUIRE(res.cells.size() == 4);
  CHECK(res.cell("ce_sgd").train_accuracy > 0.5);
  CHECK(res.cell("zh_gd").mean_output_margin >= 0.0);
  CHECK(res.cell("ce_sgd").probe_accuracy.size() == 5);  // 3 hidden -> probes 0..4
  CHECK(!read_csv(dir + "/intervention_report.csv").rows.empty());
  CHECK(xml_well_formed(slurp(dir + "/intervention_curves.svg")));
  // the grid demands two classes
  Config bad = cfg;
  bad.set("dataset.blobs.classes", "3");
  CHECK_THROWS_AS(run_intervention(intervention_options_from_config(bad), dir),
                  std::invalid_argument);
}

TEST_CASE("svg writer: deterministic bytes and escaping") {
  SvgPlot plot(300, 200, "a<b & c", "x", "y");
  plot.add_line({0, 1, 2}, {0.5, 0.25, 0.75}, "#123456", false, "series \"one\"");
  plot.add_scatter({0.5}, {0.5}, "#654321", 2.0);
  const std::string a = plot.render();
  const std::string b = plot.render();
  CHECK(a == b);
  CHECK(xml_well_formed(a));
  CHECK(a.find("a&lt;b &amp; c") != std::string::npos);
}

TEST_CASE("default override layer is the middle probe") {
  CHECK(default_override_layer(5) == 3);
  CHECK(default_override_layer(4) == 2);
  CHECK(default_override_layer(2) == 1);
}

TEST_CASE("softmax probe agrees with the model argmax on a trained net") {
  // Saturated softmax outputs cluster at the class vertices, so the k-NN
  // probe in softmax space should reproduce the model's own argmax for at
  // least 99.99% of points (the undefined-depth exclusion covers the rest).
  Dataset ds = inject_label_noise(gaussian_blobs(5, 200, 8, 4.0, 1.0, 61), 0.1, 62);
  SplitSpec split = make_split(ds.n, 0.1, 63);
  TrainConfig cfg;
  cfg.total_steps = 1200;
  cfg.schedule = {700, 1000};
  cfg.log_every = 400;
  cfg.seed = 64;
  TrainResult tr = train(init_model({8, 64, 64, 64, 5}, 65), ds, split, cfg);

  const int softmax_probe = tr.trace.probe_count() - 1;
  std::vector<float> refs;
  std::vector<std::int32_t> ref_labels;
  for (auto i : split.train_indices) {
    auto row = tr.trace.at(softmax_probe, i);
    refs.insert(refs.end(), row.begin(), row.end());
    ref_labels.push_back(ds.labels[i]);
  }
  auto probe = build_probe(refs, static_cast<std::int64_t>(ref_labels.size()),
                           tr.trace.dims[softmax_probe], ref_labels, 30, softmax_probe,
                           ds.num_classes);
  std::int64_t agree = 0;
  for (std::int64_t i = 0; i < ds.n; ++i) {
    auto v = probe.classify(tr.trace.at(softmax_probe, i));
    agree += v.predicted == tr.log.predictions.back()[i] ? 1 : 0;
  }
  CHECK(static_cast<double>(agree) / static_cast<double>(ds.n) >= 0.9999);
}
