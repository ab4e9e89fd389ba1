#include "predepth/run_store.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "predepth/csv.hpp"
#include "predepth/prng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace predepth {

Dataset build_dataset(const DatasetSpec& spec, std::uint64_t base_seed) {
  Dataset base;
  if (spec.kind == "blobs") {
    base = gaussian_blobs(spec.blobs.classes, spec.blobs.per_class, spec.blobs.dim,
                          spec.blobs.center_scale, spec.blobs.sigma,
                          derive_seed(base_seed, "dataset.blobs", 0));
  } else if (spec.kind == "rings") {
    base = concentric_rings(spec.rings.classes, spec.rings.per_class,
                            spec.rings.radius_gap, spec.rings.noise_sigma,
                            derive_seed(base_seed, "dataset.rings", 0));
  } else if (spec.kind == "blobs+rings") {
    Dataset blobs = gaussian_blobs(spec.blobs.classes, spec.blobs.per_class,
                                   spec.blobs.dim, spec.blobs.center_scale,
                                   spec.blobs.sigma,
                                   derive_seed(base_seed, "dataset.blobs", 0));
    Dataset rings = concentric_rings(spec.rings.classes, spec.rings.per_class,
                                     spec.rings.radius_gap, spec.rings.noise_sigma,
                                     derive_seed(base_seed, "dataset.rings", 0));
    if (rings.num_classes > blobs.num_classes)
      throw std::invalid_argument("build_dataset: ring classes exceed blob classes");
    base = concat_datasets(blobs, rings);
    base.num_classes = blobs.num_classes;
  } else if (spec.kind == "idx") {
    base = load_idx(spec.idx_images, spec.idx_labels);
  } else {
    throw std::invalid_argument("build_dataset: unknown kind '" + spec.kind + "'");
  }
  if (spec.noise_fraction > 0.0)
    base = inject_label_noise(base, spec.noise_fraction,
                              derive_seed(base_seed, "dataset.noise", 0));
  return base;
}

std::uint64_t file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("digest: cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in) {
    in.read(buf, sizeof(buf));
    std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::string digest_hex(std::uint64_t digest) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

namespace {

std::uint64_t hex_to_u64(const std::string& s) {
  return std::stoull(s, nullptr, 16);
}

// Canonical dump: keys sorted (nlohmann objects iterate sorted already),
// floats printed with %.17g, no whitespace variance.
void canonical_dump(const json& j, std::string& out) {
  switch (j.type()) {
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += json(it.key()).dump();
        out += ':';
        canonical_dump(it.value(), out);
      }
      out += '}';
      break;
    }
    case json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        canonical_dump(j[i], out);
      }
      out += ']';
      break;
    }
    case json::value_t::number_float:
      out += fmt_double(j.get<double>());
      break;
    default:
      out += j.dump();
  }
}

json train_to_json(const TrainConfig& t) {
  json j;
  j["loss"] = t.loss == Loss::cross_entropy ? "cross_entropy" : "zero_hinge";
  j["optimizer"] = t.optimizer == Optimizer::sgd ? "sgd" : "full_batch_gd";
  j["learning_rate"] = t.learning_rate;
  j["momentum"] = t.momentum;
  j["batch_size"] = t.batch_size;
  j["schedule"] = t.schedule;
  j["total_steps"] = t.total_steps;
  j["log_every"] = t.log_every;
  j["seed"] = t.seed;
  return j;
}

TrainConfig train_from_json(const json& j) {
  TrainConfig t;
  t.loss = j.at("loss") == "cross_entropy" ? Loss::cross_entropy : Loss::zero_hinge;
  t.optimizer = j.at("optimizer") == "sgd" ? Optimizer::sgd : Optimizer::full_batch_gd;
  t.learning_rate = j.at("learning_rate");
  t.momentum = j.at("momentum");
  t.batch_size = j.at("batch_size");
  t.schedule = j.at("schedule").get<std::vector<std::int64_t>>();
  t.total_steps = j.at("total_steps");
  t.log_every = j.at("log_every");
  t.seed = j.at("seed");
  return t;
}

json dataset_spec_to_json(const DatasetSpec& d) {
  json j;
  j["kind"] = d.kind;
  j["noise_fraction"] = d.noise_fraction;
  if (d.kind == "blobs" || d.kind == "blobs+rings") {
    j["blobs"] = {{"classes", d.blobs.classes},
                  {"per_class", d.blobs.per_class},
                  {"dim", d.blobs.dim},
                  {"center_scale", d.blobs.center_scale},
                  {"sigma", d.blobs.sigma}};
  }
  if (d.kind == "rings" || d.kind == "blobs+rings") {
    j["rings"] = {{"classes", d.rings.classes},
                  {"per_class", d.rings.per_class},
                  {"radius_gap", d.rings.radius_gap},
                  {"noise_sigma", d.rings.noise_sigma}};
  }
  if (d.kind == "idx") {
    j["idx_images"] = d.idx_images;
    j["idx_labels"] = d.idx_labels;
  }
  return j;
}

DatasetSpec dataset_spec_from_json(const json& j) {
  DatasetSpec d;
  d.kind = j.at("kind");
  d.noise_fraction = j.at("noise_fraction");
  if (j.contains("blobs")) {
    const json& b = j["blobs"];
    d.blobs = {b.at("classes"), b.at("per_class"), b.at("dim"),
               b.at("center_scale"), b.at("sigma")};
  }
  if (j.contains("rings")) {
    const json& r = j["rings"];
    d.rings = {r.at("classes"), r.at("per_class"), r.at("radius_gap"),
               r.at("noise_sigma")};
  }
  if (j.contains("idx_images")) d.idx_images = j["idx_images"];
  if (j.contains("idx_labels")) d.idx_labels = j["idx_labels"];
  return d;
}

}  // namespace

std::string manifest_to_json(const RunManifest& m) {
  json j;
  j["schema_version"] = m.schema_version;
  j["base_seed"] = m.base_seed;
  j["ensemble_size"] = m.ensemble_size;
  j["val_fraction"] = m.val_fraction;
  j["dataset"] = dataset_spec_to_json(m.dataset);
  j["dataset_rows"] = m.dataset_rows;
  j["dataset_dim"] = m.dataset_dim;
  j["dataset_classes"] = m.dataset_classes;
  j["model_widths"] = m.model_widths;
  j["train"] = train_to_json(m.train);
  j["probe"] = {{"k", m.probe.k},
                {"metric", m.probe.metric},
                {"self_mode", m.probe.self_mode == SelfMode::include ? "include" : "exclude"}};
  j["policy"] = {{"entropy_log_base", m.policy.entropy_log_base},
                 {"percentile_method", m.policy.percentile_method},
                 {"consensus_tiebreak", m.policy.consensus_tiebreak},
                 {"argmax_tiebreak", m.policy.argmax_tiebreak},
                 {"tau_rescale_scope", m.policy.tau_rescale_scope},
                 {"override_layer", m.policy.override_layer}};
  j["diverged_members"] = m.diverged_members;
  j["occurrence_count"] = m.occurrence_count;
  j["undefined_depth_count"] = m.undefined_depth_count;
  json files = json::array();
  for (const auto& f : m.files)
    files.push_back({{"path", f.path}, {"bytes", f.bytes}, {"fnv1a64", digest_hex(f.digest)}});
  j["files"] = files;

  std::string out;
  canonical_dump(j, out);
  out += '\n';
  return out;
}

RunManifest manifest_from_json(const std::string& text) {
  json j = json::parse(text);
  RunManifest m;
  m.schema_version = j.at("schema_version");
  if (m.schema_version != 1)
    throw std::runtime_error("manifest: unsupported schema version " +
                             std::to_string(m.schema_version));
  m.base_seed = j.at("base_seed");
  m.ensemble_size = j.at("ensemble_size");
  m.val_fraction = j.at("val_fraction");
  m.dataset = dataset_spec_from_json(j.at("dataset"));
  m.dataset_rows = j.at("dataset_rows");
  m.dataset_dim = j.at("dataset_dim");
  m.dataset_classes = j.at("dataset_classes");
  m.model_widths = j.at("model_widths").get<std::vector<int>>();
  m.train = train_from_json(j.at("train"));
  m.probe.k = j.at("probe").at("k");
  m.probe.metric = j.at("probe").at("metric");
  m.probe.self_mode =
      j.at("probe").at("self_mode") == "include" ? SelfMode::include : SelfMode::exclude;
  const json& p = j.at("policy");
  m.policy = {p.at("entropy_log_base"), p.at("percentile_method"),
              p.at("consensus_tiebreak"), p.at("argmax_tiebreak"),
              p.at("tau_rescale_scope"), p.at("override_layer")};
  m.diverged_members = j.at("diverged_members").get<std::vector<int>>();
  m.occurrence_count = j.at("occurrence_count");
  m.undefined_depth_count = j.at("undefined_depth_count");
  for (const json& f : j.at("files"))
    m.files.push_back({f.at("path"), f.at("bytes"),
                       hex_to_u64(f.at("fnv1a64").get<std::string>())});
  return m;
}

void write_manifest(const std::string& run_dir, const RunManifest& m) {
  write_text_file((fs::path(run_dir) / "manifest.json").string(), manifest_to_json(m));
}

RunManifest read_manifest(const std::string& run_dir) {
  const std::string path = (fs::path(run_dir) / "manifest.json").string();
  if (!fs::exists(path)) throw std::runtime_error("manifest: missing " + path);
  return manifest_from_json(read_text_file(path));
}

VerifyReport verify_files(const std::string& run_dir, const RunManifest& m) {
  VerifyReport report;
  for (const auto& f : m.files) {
    const fs::path p = fs::path(run_dir) / f.path;
    if (!fs::exists(p)) {
      report.add("missing_file", f.path, "file named in manifest does not exist");
      continue;
    }
    const std::uint64_t bytes = static_cast<std::uint64_t>(fs::file_size(p));
    if (bytes != f.bytes) {
      report.add("size_mismatch", f.path,
                 "expected " + std::to_string(f.bytes) + " bytes, found " +
                     std::to_string(bytes));
      continue;
    }
    const std::uint64_t d = file_digest(p.string());
    if (d != f.digest)
      report.add("digest_mismatch", f.path,
                 "expected " + digest_hex(f.digest) + ", found " + digest_hex(d));
  }
  return report;
}

}  // namespace predepth
