#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "predepth/config.hpp"
#include "predepth/pipeline.hpp"

namespace {

predepth::Config load_config(const std::string& path) {
  if (path.empty()) return predepth::Config{};
  return predepth::Config::parse_file(path);
}

void apply_override(predepth::Config& cfg, const std::string& key, const std::string& v) {
  if (!v.empty()) cfg.set(key, v);
}

int print_verify_report(const predepth::VerifyReport& report) {
  if (report.ok) {
    std::cout << "verify: ok\n";
    return 0;
  }
  for (const auto& issue : report.issues)
    std::cout << "verify: " << issue.kind << " " << issue.file << ": " << issue.detail
              << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prediction-depth experiment runner: trains MLP ensembles, probes "
               "hidden representations with exact k-NN classifiers and computes "
               "example-difficulty metrics."};
  app.require_subcommand(1);

  std::string config_path, out_dir, run_dir, analysis_name;
  std::string seed_override, k_override, self_mode_override, override_layer_str;
  std::string jobs_override, ks_list;
  int corner_count = 50;

  auto* ens = app.add_subcommand("ensemble", "Train an ensemble and write a run directory");
  ens->add_option("config", config_path, "key=value config file");
  ens->add_option("--out", out_dir, "run directory")->required();
  ens->add_option("--seed", seed_override, "base seed override");
  ens->add_option("--k", k_override, "probe k override");
  ens->add_option("--self-mode", self_mode_override, "include|exclude");
  ens->add_option("--override-layer", override_layer_str, "interior probe index");
  ens->add_option("--jobs", jobs_override, "parallel jobs (0 = hardware)");

  auto* ana = app.add_subcommand("analyze", "Derive CSV + SVG analyses from a run");
  ana->add_option("run", run_dir, "run directory")->required();
  ana->add_option("analysis", analysis_name,
                  "depth_hist|consistency|trend|corners|margins|curves|ksweep")
      ->required();
  ana->add_option("--count", corner_count, "examples per corner (corners analysis)");
  ana->add_option("--ks", ks_list, "comma-separated k values (ksweep)");
  ana->add_option("--override-layer", override_layer_str, "interior probe index");
  ana->add_option("--jobs", jobs_override, "parallel jobs");

  auto* inter = app.add_subcommand("intervention",
                                   "Run the 2x2 loss/optimizer margin intervention");
  inter->add_option("config", config_path, "key=value config file");
  inter->add_option("--out", out_dir, "output directory")->required();
  inter->add_option("--seed", seed_override, "base seed override");
  inter->add_option("--jobs", jobs_override, "parallel jobs");

  auto* ver = app.add_subcommand("verify", "Verify digests and re-derive metrics");
  ver->add_option("run", run_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (ens->parsed()) {
      predepth::Config cfg = load_config(config_path);
      apply_override(cfg, "seed", seed_override);
      apply_override(cfg, "probe.k", k_override);
      apply_override(cfg, "probe.self_mode", self_mode_override);
      apply_override(cfg, "override.layer", override_layer_str);
      apply_override(cfg, "jobs", jobs_override);
      predepth::EnsembleOptions opts = predepth::ensemble_options_from_config(cfg);
      predepth::run_ensemble(opts, out_dir);
      std::cout << "ensemble: wrote " << out_dir << "\n";
      return 0;
    }
    if (ana->parsed()) {
      predepth::AnalyzeOptions opts;
      opts.corner_count = corner_count;
      if (!jobs_override.empty()) opts.jobs = std::stoi(jobs_override);
      if (!override_layer_str.empty()) opts.override_layer = std::stoi(override_layer_str);
      if (!ks_list.empty()) {
        predepth::Config tmp;
        tmp.set("ks", ks_list);
        opts.ks.clear();
        for (auto v : tmp.get_int_list("ks", {})) opts.ks.push_back(static_cast<int>(v));
      }
      predepth::run_analysis(run_dir, analysis_name, opts);
      std::cout << "analyze: wrote metrics/" << analysis_name << ".csv and .svg\n";
      return 0;
    }
    if (inter->parsed()) {
      predepth::Config cfg = load_config(config_path);
      apply_override(cfg, "seed", seed_override);
      apply_override(cfg, "jobs", jobs_override);
      predepth::InterventionOptions opts = predepth::intervention_options_from_config(cfg);
      predepth::InterventionResult res = predepth::run_intervention(opts, out_dir);
      for (const auto& c : res.cells) {
        if (c.diverged) {
          std::cout << c.name << ": diverged at step " << c.diverged_step << "\n";
          continue;
        }
        std::printf("%s: train_acc=%.4f val_acc=%.4f mean_output_margin=%.6g layer90=%d\n",
                    c.name.c_str(), c.train_accuracy, c.val_accuracy,
                    c.mean_output_margin, c.earliest_layer_90);
      }
      std::cout << "intervention: wrote " << out_dir << "\n";
      return 0;
    }
    if (ver->parsed()) return print_verify_report(predepth::verify_run(run_dir));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
