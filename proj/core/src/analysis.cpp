#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "predepth/csv.hpp"
#include "predepth/margin.hpp"
#include "predepth/parallel.hpp"
#include "predepth/pipeline.hpp"
#include "predepth/prng.hpp"
#include "predepth/svg.hpp"

namespace fs = std::filesystem;

namespace predepth {

namespace {

std::string metrics_path(const RunData& run, const std::string& name,
                         const std::string& ext) {
  return (fs::path(run.dir) / "metrics" / (name + ext)).string();
}

void write_outputs(const RunData& run, const std::string& name, const std::string& csv,
                   const SvgPlot& plot) {
  write_text_file(metrics_path(run, name, ".csv"), csv);
  write_text_file(metrics_path(run, name, ".svg"), plot.render());
}

// -------- depth_hist --------

void analysis_depth_hist(const RunData& run) {
  const int bins = 2 * run.max_depth + 1;  // centers 0, 0.5, ..., L
  std::vector<double> mass_train(bins, 0.0), mass_val(bins, 0.0), centers(bins);
  for (int b = 0; b < bins; ++b) centers[b] = 0.5 * b;
  std::int64_t n_train = 0, n_val = 0;
  for (const auto& p : run.profiles) {
    if (p.pd_train_defined) {
      int b = std::clamp(static_cast<int>(std::lround(p.mean_pd_train * 2.0)), 0, bins - 1);
      mass_train[b] += 1.0;
      ++n_train;
    }
    if (p.pd_val_defined) {
      int b = std::clamp(static_cast<int>(std::lround(p.mean_pd_val * 2.0)), 0, bins - 1);
      mass_val[b] += 1.0;
      ++n_val;
    }
  }
  for (auto& m : mass_train) m = n_train ? m / static_cast<double>(n_train) : 0.0;
  for (auto& m : mass_val) m = n_val ? m / static_cast<double>(n_val) : 0.0;

  CsvWriter w;
  w.header("bin_center,mass_train,mass_val");
  for (int b = 0; b < bins; ++b) {
    w.field(centers[b]);
    w.field(mass_train[b]);
    w.field(mass_val[b]);
    w.end_row();
  }
  SvgPlot plot(640, 420, "Distribution of mean prediction depth", "mean prediction depth",
               "fraction of examples");
  plot.add_bars(centers, mass_train, 0.22, "#4878cf", "train occurrences");
  std::vector<double> shifted = centers;
  for (auto& c : shifted) c += 0.24;
  plot.add_bars(shifted, mass_val, 0.22, "#d65f5f", "validation occurrences");
  write_outputs(run, "depth_hist", w.str(), plot);
}

// -------- consistency --------

void analysis_consistency(const RunData& run) {
  CsvWriter w;
  w.header("id,mean_pd_val,c_hat,c_star,entropy");
  std::vector<double> xs, chat, cstar;
  for (const auto& p : run.profiles) {
    if (!p.ensemble_defined || !p.pd_val_defined) continue;
    w.field(p.id);
    w.field(p.mean_pd_val);
    w.field(p.c_hat);
    w.field(p.c_star);
    w.field(p.entropy);
    w.end_row();
    xs.push_back(p.mean_pd_val);
    chat.push_back(p.c_hat);
    cstar.push_back(p.c_star);
  }

  // Seed-consistency check: mean validation PD from the even-indexed members
  // against the odd-indexed members.
  std::vector<double> even, odd;
  for (const auto& row : run.table.rows) {
    double se = 0, so = 0;
    std::int64_t ne = 0, no = 0;
    for (const Occurrence& o : row) {
      if (!o.was_val || !o.depth_defined) continue;
      if (o.model % 2 == 0) {
        se += o.depth;
        ++ne;
      } else {
        so += o.depth;
        ++no;
      }
    }
    if (ne > 0 && no > 0) {
      even.push_back(se / static_cast<double>(ne));
      odd.push_back(so / static_cast<double>(no));
    }
  }
  std::string subtitle = "split-half PD Spearman: n/a";
  if (even.size() >= 2) {
    SpearmanResult rho = spearman(even, odd);
    if (rho.defined)
      subtitle = "split-half PD Spearman = " + fmt_double(rho.rho) + " over " +
                 std::to_string(even.size()) + " examples";
  }

  SvgPlot plot(640, 420, "Consistency vs mean validation prediction depth",
               "mean PD (validation)", "score");
  plot.set_subtitle(subtitle);
  plot.add_scatter(xs, chat, "#4878cf", 2.0, "consistency C^");
  plot.add_scatter(xs, cstar, "#d65f5f", 2.0, "consensus-consistency C*");
  write_outputs(run, "consistency", w.str(), plot);
}

// -------- trend --------

void analysis_trend(const RunData& run) {
  std::vector<double> xs, c_star, entropy, accuracy, tau;
  for (const auto& p : run.profiles) {
    if (!p.ensemble_defined || !p.pd_val_defined || !p.tau_defined) continue;
    xs.push_back(p.mean_pd_val);
    c_star.push_back(p.c_star);
    entropy.push_back(p.entropy);
    accuracy.push_back(p.c_hat);
    tau.push_back(p.mean_tau);
  }
  BucketTrend bt_cstar = bucket_trend(xs, c_star);
  BucketTrend bt_entropy = bucket_trend(xs, entropy);
  BucketTrend bt_acc = bucket_trend(xs, accuracy);
  BucketTrend bt_tau = bucket_trend(xs, tau);

  CsvWriter w;
  w.header("bucket,count,mean_c_star,mean_entropy,mean_accuracy,mean_tau");
  for (std::size_t b = 0; b < bt_cstar.bucket.size(); ++b) {
    w.field(bt_cstar.bucket[b]);
    w.field(bt_cstar.count[b]);
    w.field(bt_cstar.mean[b]);
    w.field(bt_entropy.mean[b]);
    w.field(bt_acc.mean[b]);
    w.field(bt_tau.mean[b]);
    w.end_row();
  }
  std::vector<double> bx(bt_cstar.bucket.begin(), bt_cstar.bucket.end());
  SvgPlot plot(640, 420, "Bucketed trends vs mean validation prediction depth",
               "prediction depth bucket", "bucket mean");
  std::string sub = "Spearman: C*=" + fmt_double(bt_cstar.rank_corr.rho) +
                    " S=" + fmt_double(bt_entropy.rank_corr.rho) +
                    " acc=" + fmt_double(bt_acc.rank_corr.rho) +
                    " tau=" + fmt_double(bt_tau.rank_corr.rho);
  plot.set_subtitle(sub);
  plot.add_line(bx, bt_cstar.mean, "#d65f5f", false, "consensus-consistency");
  plot.add_line(bx, bt_acc.mean, "#4878cf", false, "accuracy");
  plot.add_line(bx, bt_entropy.mean, "#6acc64", false, "prediction entropy");
  plot.add_line(bx, bt_tau.mean, "#b47cc7", false, "rescaled iteration learned");
  write_outputs(run, "trend", w.str(), plot);
}

// -------- corners --------

void analysis_corners(const RunData& run, const AnalyzeOptions& opts) {
  const int layer =
      opts.override_layer > 0 ? opts.override_layer : run.manifest.policy.override_layer;
  const Corner corners[4] = {Corner::easy, Corner::looks_like_other,
                             Corner::ambiguous_unless_label, Corner::ambiguous};

  // Per-example override tallies over validation occurrences.
  std::vector<std::int64_t> occ(run.dataset.n, 0), model_ok(run.dataset.n, 0),
      probe_ok(run.dataset.n, 0);
  for (int m : run.members) {
    MemberProbePreds mp = load_member_probes(run, m);
    for (std::int64_t i = 0; i < run.dataset.n; ++i) {
      if (!mp.was_val[i]) continue;
      ++occ[i];
      model_ok[i] += mp.final_pred[i] == run.dataset.labels[i] ? 1 : 0;
      probe_ok[i] += mp.probe_preds[layer][i] == run.dataset.labels[i] ? 1 : 0;
    }
  }

  CsvWriter w;
  w.header(
      "corner,rank,id,distance,mean_pd_val,mean_pd_train,truth,consensus,"
      "val_occurrences,model_correct,probe_correct");
  SvgPlot plot(640, 480, "Prediction depth: validation vs train", "mean PD (validation)",
               "mean PD (train)");
  std::vector<double> all_x, all_y;
  for (const auto& p : run.profiles) {
    if (!p.corner_defined) continue;
    all_x.push_back(p.mean_pd_val);
    all_y.push_back(p.mean_pd_train);
  }
  plot.add_scatter(all_x, all_y, "#bbbbbb", 1.6, "all examples");

  const char* colors[4] = {"#4878cf", "#d65f5f", "#6acc64", "#b47cc7"};
  std::ostringstream sub;
  sub << "override layer " << layer << ";";
  for (int c = 0; c < 4; ++c) {
    auto picks = corner_examples(run.profiles, corners[c], opts.corner_count);
    std::vector<double> cx, cy;
    std::int64_t c_occ = 0, c_model = 0, c_probe = 0;
    for (std::size_t rank = 0; rank < picks.size(); ++rank) {
      const auto& p = run.profiles[picks[rank].id];
      w.field(corner_name(corners[c]));
      w.field(static_cast<std::int64_t>(rank));
      w.field(p.id);
      w.field(picks[rank].distance);
      w.field(p.mean_pd_val);
      w.field(p.mean_pd_train);
      w.field(p.truth);
      if (p.ensemble_defined)
        w.field(p.consensus);
      else
        w.empty();
      w.field(occ[p.id]);
      w.field(model_ok[p.id]);
      w.field(probe_ok[p.id]);
      w.end_row();
      cx.push_back(p.mean_pd_val);
      cy.push_back(p.mean_pd_train);
      c_occ += occ[p.id];
      c_model += model_ok[p.id];
      c_probe += probe_ok[p.id];
    }
    plot.add_scatter(cx, cy, colors[c], 3.0, corner_name(corners[c]));
    if (c_occ > 0)
      sub << ' ' << corner_name(corners[c])
          << " model=" << fmt_double(static_cast<double>(c_model) / c_occ)
          << " probe=" << fmt_double(static_cast<double>(c_probe) / c_occ);
  }
  plot.set_subtitle(sub.str());
  write_outputs(run, "corners", w.str(), plot);
}

// -------- margins --------

void analysis_margins(const RunData& run, const AnalyzeOptions& opts) {
  const std::int64_t n = run.dataset.n;
  std::vector<double> sum_out(n, 0.0), sum_in(n, 0.0);
  std::vector<std::int64_t> n_out(n, 0), n_in(n, 0), excluded(n, 0);

  for (int m : run.members) {
    MlpModel model =
        load_model((fs::path(run.dir) / "models" / (std::to_string(m) + ".pdmlp")).string());
    std::vector<MarginEstimate> est(static_cast<std::size_t>(n));
    parallel_for(n, opts.jobs, [&](std::int64_t i) {
      est[i] = input_margin(model, run.dataset.row(i));
    });
    CsvWriter mw;
    mw.header("id,output_margin,input_margin,pred,min_pair_class");
    for (std::int64_t i = 0; i < n; ++i) {
      mw.field(i);
      mw.field(est[i].output_margin);
      if (std::isfinite(est[i].input_margin))
        mw.field(est[i].input_margin);
      else
        mw.field("inf");
      mw.field(est[i].predicted);
      mw.field(est[i].min_pair_class);
      mw.end_row();
      sum_out[i] += est[i].output_margin;
      ++n_out[i];
      if (std::isfinite(est[i].input_margin)) {
        sum_in[i] += est[i].input_margin;
        ++n_in[i];
      } else {
        ++excluded[i];
      }
    }
    write_text_file(metrics_path(run, "margins_" + std::to_string(m), ".csv"), mw.str());
  }

  CsvWriter w;
  w.header("id,mean_pd_val,mean_output_margin,mean_input_margin,input_margin_excluded");
  std::vector<double> xs, mo, mi;
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& p = run.profiles[i];
    w.field(i);
    if (p.pd_val_defined)
      w.field(p.mean_pd_val);
    else
      w.empty();
    const double mean_out = n_out[i] ? sum_out[i] / n_out[i] : 0.0;
    w.field(mean_out);
    if (n_in[i] > 0)
      w.field(sum_in[i] / n_in[i]);
    else
      w.empty();
    w.field(excluded[i]);
    w.end_row();
    if (p.pd_val_defined && n_out[i] > 0 && n_in[i] > 0) {
      xs.push_back(p.mean_pd_val);
      mo.push_back(mean_out);
      mi.push_back(sum_in[i] / n_in[i]);
    }
  }

  std::string sub;
  {
    PearsonLogResult ro = pearson_log(xs, mo);
    PearsonLogResult ri = pearson_log(xs, mi);
    sub = "Pearson on log margin: output=" + fmt_double(ro.r) +
          " (excl " + std::to_string(ro.excluded) + "), input=" + fmt_double(ri.r) +
          " (excl " + std::to_string(ri.excluded) + ")";
  }
  SvgPlot plot(640, 420, "Margins vs mean validation prediction depth",
               "mean PD (validation)", "log10 margin");
  plot.set_subtitle(sub);
  std::vector<double> lo, li, xo, xi;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (mo[i] > 0) {
      xo.push_back(xs[i]);
      lo.push_back(std::log10(mo[i]));
    }
    if (mi[i] > 0) {
      xi.push_back(xs[i]);
      li.push_back(std::log10(mi[i]));
    }
  }
  plot.add_scatter(xo, lo, "#4878cf", 2.0, "output margin");
  plot.add_scatter(xi, li, "#d65f5f", 2.0, "input margin");
  write_outputs(run, "margins", w.str(), plot);
}

// -------- curves --------

void analysis_curves(const RunData& run) {
  CurveTable ct = pooled_inference_curve(run);
  CsvWriter w;
  w.header("layer,acc_clean,acc_noisy_vs_noisy,acc_noisy_vs_orig,acc_val");
  for (std::size_t l = 0; l < ct.cells.size(); ++l) {
    w.field(static_cast<std::int64_t>(l));
    for (std::size_t p = 0; p < ct.partitions.size(); ++p) {
      if (ct.cells[l][p].defined)
        w.field(ct.cells[l][p].accuracy);
      else
        w.empty();
    }
    w.end_row();
  }

  SvgPlot plot(720, 440, "Inference learning curve (solid) vs training curve (dashed)",
               "probe layer (training curve rescaled onto the same axis)", "accuracy");
  const char* colors[4] = {"#4878cf", "#e8a33d", "#6acc64", "#d65f5f"};
  const char* names[4] = {"clean train", "noisy vs noisy", "noisy vs original",
                          "validation"};
  std::vector<double> layers;
  for (std::size_t l = 0; l < ct.cells.size(); ++l) layers.push_back(static_cast<double>(l));
  for (std::size_t p = 0; p < 4; ++p) {
    std::vector<double> xs, ys;
    for (std::size_t l = 0; l < ct.cells.size(); ++l) {
      if (!ct.cells[l][p].defined) continue;
      xs.push_back(layers[l]);
      ys.push_back(ct.cells[l][p].accuracy);
    }
    if (!xs.empty()) plot.add_line(xs, ys, colors[p], false, names[p]);
  }

  // Mean training curves over members, steps rescaled onto [0, L]. A series
  // is dropped entirely when its partition was empty (cells blank).
  std::vector<std::vector<double>> acc(4);
  std::vector<std::int64_t> steps;
  bool series_present[4] = {true, true, true, true};
  bool first = true;
  for (int m : run.members) {
    CsvTable t = read_csv((fs::path(run.dir) / "logs" / (std::to_string(m) + ".csv")).string());
    const int cols[4] = {t.column("acc_clean"), t.column("acc_noisy"),
                         t.column("acc_orig"), t.column("acc_val")};
    if (first) {
      for (const auto& row : t.rows) steps.push_back(std::stoll(row[0]));
      for (auto& a : acc) a.assign(t.rows.size(), 0.0);
      first = false;
    }
    for (std::size_t c = 0; c < t.rows.size(); ++c)
      for (int s = 0; s < 4; ++s) {
        const std::string& cell = t.rows[c][cols[s]];
        if (cell.empty())
          series_present[s] = false;
        else
          acc[s][c] += std::strtod(cell.c_str(), nullptr);
      }
  }
  if (!steps.empty() && !run.members.empty()) {
    const double L = static_cast<double>(run.max_depth);
    const double last = static_cast<double>(steps.back() > 0 ? steps.back() : 1);
    std::vector<double> xs;
    for (std::int64_t s : steps) xs.push_back(static_cast<double>(s) / last * L);
    for (int s = 0; s < 4; ++s) {
      if (!series_present[s]) continue;
      std::vector<double> ys;
      for (double v : acc[s]) ys.push_back(v / static_cast<double>(run.members.size()));
      plot.add_line(xs, ys, colors[s], true);
    }
  }
  write_outputs(run, "curves", w.str(), plot);
}

// -------- ksweep --------

void analysis_ksweep(const RunData& run, const AnalyzeOptions& opts) {
  auto rows = ksweep_accuracies(run, opts.ks, opts.jobs);
  CsvWriter w;
  w.header("layer,k,acc_train,acc_val");
  for (const auto& r : rows) {
    w.field(r.layer);
    w.field(r.k);
    if (r.train_defined)
      w.field(r.acc_train);
    else
      w.empty();
    if (r.val_defined)
      w.field(r.acc_val);
    else
      w.empty();
    w.end_row();
  }
  SvgPlot plot(640, 420, "k-NN probe accuracy for several k", "probe layer", "accuracy");
  const char* colors[6] = {"#4878cf", "#d65f5f", "#6acc64", "#b47cc7", "#e8a33d", "#555555"};
  int ci = 0;
  for (int k : opts.ks) {
    std::vector<double> xs, yt, yv;
    for (const auto& r : rows) {
      if (r.k != k) continue;
      xs.push_back(r.layer);
      yt.push_back(r.acc_train);
      yv.push_back(r.acc_val);
    }
    const std::string color = colors[ci++ % 6];
    plot.add_line(xs, yv, color, false, "k=" + std::to_string(k) + " val");
    plot.add_line(xs, yt, color, true, "k=" + std::to_string(k) + " train");
  }
  write_outputs(run, "ksweep", w.str(), plot);
}

}  // namespace

CurveTable pooled_inference_curve(const RunData& run) {
  const int probes = run.max_depth + 1;
  CurveTable ct;
  ct.partitions = {"clean_train", "noisy_vs_noisy", "noisy_vs_orig", "validation"};
  std::vector<std::vector<std::int64_t>> hits(probes, std::vector<std::int64_t>(4, 0));
  std::vector<std::vector<std::int64_t>> counts(probes, std::vector<std::int64_t>(4, 0));
  for (int m : run.members) {
    MemberProbePreds mp = load_member_probes(run, m);
    for (std::int64_t i = 0; i < run.dataset.n; ++i) {
      const bool noisy = run.dataset.noise_mask[i] != 0;
      for (int l = 0; l < probes; ++l) {
        const std::int32_t pred = mp.probe_preds[l][i];
        if (mp.was_val[i]) {
          ++counts[l][3];
          hits[l][3] += pred == run.dataset.labels[i] ? 1 : 0;
        } else if (noisy) {
          ++counts[l][1];
          hits[l][1] += pred == run.dataset.labels[i] ? 1 : 0;
          ++counts[l][2];
          hits[l][2] += pred == run.dataset.original_labels[i] ? 1 : 0;
        } else {
          ++counts[l][0];
          hits[l][0] += pred == run.dataset.labels[i] ? 1 : 0;
        }
      }
    }
  }
  ct.cells.assign(probes, std::vector<CurveCell>(4));
  for (int l = 0; l < probes; ++l)
    for (int p = 0; p < 4; ++p) {
      ct.cells[l][p].count = counts[l][p];
      if (counts[l][p] > 0) {
        ct.cells[l][p].defined = true;
        ct.cells[l][p].accuracy =
            static_cast<double>(hits[l][p]) / static_cast<double>(counts[l][p]);
      }
    }
  return ct;
}

OverrideSummary corner_override_summary(const RunData& run, Corner corner, int count,
                                        int layer) {
  OverrideSummary s;
  auto picks = corner_examples(run.profiles, corner, count);
  std::vector<std::uint8_t> selected(static_cast<std::size_t>(run.dataset.n), 0);
  for (const auto& p : picks) {
    selected[p.id] = 1;
    s.ids.push_back(p.id);
  }
  std::int64_t model_ok = 0, probe_ok = 0;
  for (int m : run.members) {
    MemberProbePreds mp = load_member_probes(run, m);
    for (std::int64_t id : s.ids) {
      if (!mp.was_val[id]) continue;
      ++s.occurrences;
      model_ok += mp.final_pred[id] == run.dataset.labels[id] ? 1 : 0;
      probe_ok += mp.probe_preds[layer][id] == run.dataset.labels[id] ? 1 : 0;
    }
  }
  if (s.occurrences > 0) {
    s.model_accuracy = static_cast<double>(model_ok) / static_cast<double>(s.occurrences);
    s.probe_accuracy = static_cast<double>(probe_ok) / static_cast<double>(s.occurrences);
  }
  return s;
}

std::vector<KSweepRow> ksweep_accuracies(const RunData& run, const std::vector<int>& ks,
                                         int jobs) {
  if (ks.empty()) throw std::invalid_argument("ksweep: no k values");
  const int kmax = *std::max_element(ks.begin(), ks.end());
  const int probes = run.max_depth + 1;
  const Dataset& ds = run.dataset;

  struct Cell {
    std::int64_t hits_train = 0, n_train = 0, hits_val = 0, n_val = 0;
  };
  std::vector<std::vector<Cell>> cells(probes, std::vector<Cell>(ks.size()));

  for (int m : run.members) {
    const SplitSpec split = make_split(
        ds.n, run.manifest.val_fraction,
        derive_seed(run.manifest.base_seed, "split", static_cast<std::uint64_t>(m)));
    EmbeddingTrace trace = load_trace(
        (fs::path(run.dir) / "embeddings" / (std::to_string(m) + ".pdemb")).string());
    const auto& tr = split.train_indices;
    std::vector<std::int64_t> ref_pos(static_cast<std::size_t>(ds.n), -1);
    for (std::size_t p = 0; p < tr.size(); ++p) ref_pos[tr[p]] = static_cast<std::int64_t>(p);
    std::vector<std::int32_t> ref_labels(tr.size());
    for (std::size_t p = 0; p < tr.size(); ++p) ref_labels[p] = ds.labels[tr[p]];

    for (int l = 0; l < probes; ++l) {
      const int dim = trace.dims[l];
      std::vector<float> refs(tr.size() * static_cast<std::size_t>(dim));
      for (std::size_t p = 0; p < tr.size(); ++p) {
        auto row = trace.at(l, tr[p]);
        std::copy(row.begin(), row.end(),
                  refs.begin() + static_cast<std::int64_t>(p) * dim);
      }
      ProbeIndex probe = build_probe(refs, static_cast<std::int64_t>(tr.size()), dim,
                                     ref_labels, kmax, l, ds.num_classes);
      std::vector<std::vector<std::uint8_t>> ok(
          ks.size(), std::vector<std::uint8_t>(static_cast<std::size_t>(ds.n)));
      parallel_for(ds.n, jobs, [&](std::int64_t i) {
        std::int64_t excl =
            run.manifest.probe.self_mode == SelfMode::exclude ? ref_pos[i] : -1;
        auto nn = probe.nearest(trace.at(l, i), kmax, excl);
        for (std::size_t kk = 0; kk < ks.size(); ++kk) {
          auto v = probe.vote_from_neighbors(nn, ks[kk]);
          ok[kk][i] = v.predicted == ds.labels[i] ? 1 : 0;
        }
      });
      for (std::size_t kk = 0; kk < ks.size(); ++kk) {
        Cell& c = cells[l][kk];
        for (std::int64_t i = 0; i < ds.n; ++i) {
          if (ref_pos[i] >= 0) {
            ++c.n_train;
            c.hits_train += ok[kk][i];
          } else {
            ++c.n_val;
            c.hits_val += ok[kk][i];
          }
        }
      }
    }
  }

  std::vector<KSweepRow> rows;
  for (int l = 0; l < probes; ++l)
    for (std::size_t kk = 0; kk < ks.size(); ++kk) {
      KSweepRow r;
      r.layer = l;
      r.k = ks[kk];
      const Cell& c = cells[l][kk];
      if (c.n_train > 0) {
        r.train_defined = true;
        r.acc_train = static_cast<double>(c.hits_train) / static_cast<double>(c.n_train);
      }
      if (c.n_val > 0) {
        r.val_defined = true;
        r.acc_val = static_cast<double>(c.hits_val) / static_cast<double>(c.n_val);
      }
      rows.push_back(r);
    }
  return rows;
}

void run_analysis(const std::string& run_dir, const std::string& analysis,
                  const AnalyzeOptions& opts) {
  RunData run = load_run(run_dir);
  if (analysis == "depth_hist")
    analysis_depth_hist(run);
  else if (analysis == "consistency")
    analysis_consistency(run);
  else if (analysis == "trend")
    analysis_trend(run);
  else if (analysis == "corners")
    analysis_corners(run, opts);
  else if (analysis == "margins")
    analysis_margins(run, opts);
  else if (analysis == "curves")
    analysis_curves(run);
  else if (analysis == "ksweep")
    analysis_ksweep(run, opts);
  else
    throw std::invalid_argument("unknown analysis '" + analysis + "'");
}

}  // namespace predepth
