#include "cocoa/config.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <thread>

#include "cocoa/rng.hpp"
#include "cocoa/text.hpp"

namespace cocoa {

namespace {

using nlohmann::json;

class Reader {
 public:
  explicit Reader(std::vector<Diagnostic>& diags) : diags_(diags) {}

  void add(std::string field, std::string message) {
    diags_.push_back({std::move(field), std::move(message)});
  }

  static const json* child(const json& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key)) return nullptr;
    return &obj.at(key);
  }

  template <typename T>
  void get(const json& obj, const char* key, const std::string& field, T& out) {
    const json* j = child(obj, key);
    if (!j) return;
    try {
      out = j->get<T>();
    } catch (const json::exception&) {
      add(field, "has the wrong type");
    }
  }

  void get_seed(const json& obj, const char* key, const std::string& field, std::uint64_t& out) {
    const json* j = child(obj, key);
    if (!j) return;
    if (!j->is_number_unsigned()) {
      add(field, "must be a non-negative integer");
      return;
    }
    out = j->get<std::uint64_t>();
  }

  void get_count(const json& obj, const char* key, const std::string& field, std::size_t& out) {
    const json* j = child(obj, key);
    if (!j) return;
    if (!j->is_number_unsigned()) {
      add(field, "must be a non-negative integer");
      return;
    }
    out = j->get<std::size_t>();
  }

 private:
  std::vector<Diagnostic>& diags_;
};

std::vector<std::string> id_list(Reader& rd, const json& obj, const char* key,
                                 const std::string& field, std::vector<std::string> fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  const json& j = obj.at(key);
  if (!j.is_array()) {
    rd.add(field, "must be a list of batch ids");
    return fallback;
  }
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (v.is_string()) out.push_back(v.get<std::string>());
    else if (v.is_number_integer()) out.push_back(std::to_string(v.get<long long>()));
    else rd.add(field, "batch ids must be strings or integers");
  }
  return out;
}

std::vector<ModelConfig> default_models() {
  auto mk = [](std::string name, ModelSpec spec, std::vector<GridAxis> grid) {
    ModelConfig m;
    m.name = std::move(name);
    m.spec = std::move(spec);
    m.search.grid = std::move(grid);
    return m;
  };
  return {mk("knn", KnnSpec{}, {{"k", {1, 3, 5, 7, 11}}}),
          mk("forest", ForestSpec{}, {{"trees", {100, 300}}, {"max_depth", {8, 16, 0}}}),
          mk("svr", SvrSpec{}, {{"C", {1, 10, 100}}, {"gamma", {0.01, 0.1, 1}}, {"epsilon", {0.01, 0.05}}}),
          mk("mlp", default_mlp(), {{"lr", {1e-3, 1e-4}}}),
          mk("cnn", default_cnn(), {{"lr", {1e-3, 1e-4}}})};
}

PipelineConfig parse(const json& doc, const std::filesystem::path& base_dir,
                     std::vector<Diagnostic>& diags, bool check_paths) {
  Reader rd(diags);
  PipelineConfig cfg;
  cfg.range[RangeTag::Vis] = {{500.0, 800.0}, 1000, {50, 1000, 0, false}};
  cfg.range[RangeTag::Nir] = {{1100.0, 2000.0}, 500, {50, 2000, 0, false}};
  cfg.split.test_batch_ids = {"17", "18", "19", "20"};
  cfg.ranges = {RangeTag::Vis, RangeTag::Nir};
  if (!doc.is_object()) {
    rd.add("", "config must be a JSON object");
    return cfg;
  }
  static const std::set<std::string> kSections = {"paths", "ranges", "crop", "calibration",
                                                  "filter", "bootstrap", "split", "models",
                                                  "cv", "seeds", "report", "threads"};
  for (const auto& [key, _] : doc.items()) {
    if (!kSections.contains(key)) rd.add(key, "unknown config section");
  }

  // paths
  const json empty = json::object();
  const json& paths = doc.contains("paths") ? doc.at("paths") : empty;
  std::string manifest;
  std::string output;
  rd.get(paths, "manifest", "paths.manifest", manifest);
  rd.get(paths, "output", "paths.output", output);
  if (manifest.empty()) {
    rd.add("paths.manifest", "missing manifest path");
  } else {
    cfg.manifest = std::filesystem::path(manifest).is_absolute() ? std::filesystem::path(manifest)
                                                                 : base_dir / manifest;
    if (check_paths && !std::filesystem::exists(cfg.manifest)) {
      rd.add("paths.manifest", "file not found: " + cfg.manifest.string());
    }
  }
  if (output.empty()) rd.add("paths.output", "missing output directory");
  else cfg.output = std::filesystem::path(output).is_absolute() ? std::filesystem::path(output) : base_dir / output;

  // ranges
  if (doc.contains("ranges")) {
    cfg.ranges.clear();
    const json& r = doc.at("ranges");
    if (!r.is_array() || r.empty()) {
      rd.add("ranges", "must be a non-empty list of vis/nir");
    } else {
      for (const auto& v : r) {
        try {
          const RangeTag tag = parse_range(v.get<std::string>());
          if (std::find(cfg.ranges.begin(), cfg.ranges.end(), tag) == cfg.ranges.end()) {
            cfg.ranges.push_back(tag);
          }
        } catch (const std::exception&) {
          rd.add("ranges", "entries must be vis or nir");
        }
      }
    }
  }

  for (RangeTag tag : {RangeTag::Vis, RangeTag::Nir}) {
    const std::string r(to_string(tag));
    RangeSettings& s = cfg.range[tag];
    if (doc.contains("crop") && doc.at("crop").contains(r)) {
      std::vector<double> w;
      rd.get(doc.at("crop"), r.c_str(), "crop." + r, w);
      if (w.size() != 2 || !(w[0] < w[1])) rd.add("crop." + r, "must be [lo, hi] with lo < hi");
      else s.crop = {w[0], w[1]};
    }
    if (doc.contains("filter") && doc.at("filter").contains("n")) {
      rd.get_count(doc.at("filter").at("n"), r.c_str(), "filter.n." + r, s.filter_n);
    }
    if (doc.contains("bootstrap") && doc.at("bootstrap").contains(r)) {
      const json& b = doc.at("bootstrap").at(r);
      const std::string f = "bootstrap." + r;
      rd.get_count(b, "subset_size", f + ".subset_size", s.bootstrap.subset_size);
      rd.get_count(b, "realizations", f + ".realizations", s.bootstrap.realizations);
      rd.get(b, "with_replacement", f + ".with_replacement", s.bootstrap.with_replacement);
    }
  }

  if (doc.contains("calibration") && doc.at("calibration").contains("saturation_ceiling")) {
    double ceiling = 0.0;
    rd.get(doc.at("calibration"), "saturation_ceiling", "calibration.saturation_ceiling", ceiling);
    if (!(ceiling > 0.0)) rd.add("calibration.saturation_ceiling", "must be positive");
    else cfg.saturation_ceiling = ceiling;
  }

  // filter
  if (doc.contains("filter")) {
    const json& f = doc.at("filter");
    std::string mode = "topn";
    rd.get(f, "mode", "filter.mode", mode);
    if (mode == "topn") cfg.filter_mode = FilterMode::TopN;
    else if (mode == "threshold") cfg.filter_mode = FilterMode::Threshold;
    else if (mode == "threshold_then_topn") cfg.filter_mode = FilterMode::ThresholdThenTopN;
    else rd.add("filter.mode", "must be topn, threshold or threshold_then_topn");
    rd.get(f, "tau", "filter.tau", cfg.tau);
  }
  if (!(cfg.tau > 0.0)) rd.add("filter.tau", "SAM threshold must be positive");

  for (RangeTag tag : cfg.ranges) {
    const std::string r(to_string(tag));
    const RangeSettings& s = cfg.range[tag];
    const std::string f = "bootstrap." + r;
    if (s.bootstrap.subset_size < 1) rd.add(f + ".subset_size", "must be >= 1");
    if (s.bootstrap.realizations < 1) rd.add(f + ".realizations", "must be >= 1");
    if (cfg.filter_mode != FilterMode::Threshold) {
      if (s.filter_n < 1) rd.add("filter.n." + r, "must be >= 1");
      else if (!s.bootstrap.with_replacement && s.bootstrap.subset_size > s.filter_n) {
        rd.add(f + ".subset_size", "subset size " + std::to_string(s.bootstrap.subset_size) +
                                       " exceeds the " + std::to_string(s.filter_n) +
                                       " spectra kept per batch");
      }
    }
  }

  // split
  if (doc.contains("split")) {
    const json& sp = doc.at("split");
    const auto test = id_list(rd, sp, "test_batch_ids", "split.test_batch_ids",
                              {cfg.split.test_batch_ids.begin(), cfg.split.test_batch_ids.end()});
    cfg.split.test_batch_ids = {test.begin(), test.end()};
    cfg.region_batch_ids = id_list(rd, sp, "region_batch_ids", "split.region_batch_ids", {});
    rd.get(sp, "within_batch_test_fraction", "split.within_batch_test_fraction",
           cfg.split.within_batch_test_fraction);
  }
  if (!(cfg.split.within_batch_test_fraction >= 0.0 && cfg.split.within_batch_test_fraction < 1.0)) {
    rd.add("split.within_batch_test_fraction", "must be in [0, 1)");
  }
  for (const auto& id : cfg.region_batch_ids) {
    if (cfg.split.test_batch_ids.contains(id)) {
      rd.add("split.region_batch_ids", "batch " + id + " is also a held-out test batch");
    }
  }

  // models
  if (doc.contains("cv")) rd.get_count(doc.at("cv"), "folds", "cv.folds", cfg.cv_folds);
  if (cfg.cv_folds < 2) rd.add("cv.folds", "must be >= 2");
  if (doc.contains("models")) {
    const json& ms = doc.at("models");
    if (!ms.is_array() || ms.empty()) rd.add("models", "must be a non-empty list");
    std::set<std::string> names;
    for (std::size_t i = 0; ms.is_array() && i < ms.size(); ++i) {
      const std::string f = "models[" + std::to_string(i) + "]";
      const json& m = ms[i];
      ModelConfig mc;
      try {
        mc.name = m.at("name").get<std::string>();
      } catch (const json::exception&) {
        rd.add(f + ".name", "missing model name");
        continue;
      }
      if (!names.insert(mc.name).second) rd.add(f + ".name", "duplicate model name " + mc.name);
      try {
        const json spec = m.contains("spec") ? m.at("spec") : json{{"family", mc.name}};
        mc.spec = model_spec_from_json(spec);
        mc.seed_given = spec.contains("seed");
        validate(mc.spec);
      } catch (const std::exception& e) {
        rd.add(f + ".spec", e.what());
        continue;
      }
      if (m.contains("grid")) {
        try {
          mc.search = grid_config_from_json(json{{"grid", m.at("grid")}});
          for (const auto& axis : mc.search.grid) {
            if (axis.values.empty()) rd.add(f + ".grid." + axis.name, "has no values");
            for (double v : axis.values) {
              ModelSpec probe = mc.spec;
              apply_param(probe, axis.name, v);
              validate(probe);
            }
          }
        } catch (const std::exception& e) {
          rd.add(f + ".grid", e.what());
        }
      }
      mc.search.folds = cfg.cv_folds;
      cfg.models.push_back(std::move(mc));
    }
  } else {
    cfg.models = default_models();
    for (auto& m : cfg.models) m.search.folds = cfg.cv_folds;
  }

  if (doc.contains("seeds")) {
    const json& s = doc.at("seeds");
    rd.get_seed(s, "bootstrap", "seeds.bootstrap", cfg.seeds.bootstrap);
    rd.get_seed(s, "split", "seeds.split", cfg.seeds.split);
    rd.get_seed(s, "cv", "seeds.cv", cfg.seeds.cv);
    rd.get_seed(s, "model", "seeds.model", cfg.seeds.model);
  } else {
    rd.add("seeds", "seeds must be given explicitly");
  }
  if (doc.contains("report")) {
    rd.get(doc.at("report"), "train_rows", "report.train_rows", cfg.report.train_rows);
    rd.get(doc.at("report"), "plots", "report.plots", cfg.report.plots);
  }
  if (doc.contains("threads")) {
    std::size_t t = 0;
    rd.get_count(doc, "threads", "threads", t);
    cfg.threads = static_cast<unsigned>(t);
  }

  for (auto& [tag, s] : cfg.range) s.bootstrap.seed = cfg.seeds.bootstrap;
  cfg.source = doc;
  return cfg;
}

json parse_file(const std::filesystem::path& path) {
  const std::string body = text::read_file(path);
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Config, path.string() + ": " + e.what());
  }
}

}  // namespace

unsigned PipelineConfig::worker_threads() const {
  if (threads > 0) return threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<Diagnostic> validate_config(const json& doc, const std::filesystem::path& base_dir,
                                        bool check_paths) {
  std::vector<Diagnostic> diags;
  parse(doc, base_dir, diags, check_paths);
  return diags;
}

std::vector<Diagnostic> validate_config_file(const std::filesystem::path& path, bool check_paths) {
  return validate_config(parse_file(path), path.parent_path(), check_paths);
}

PipelineConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  std::vector<Diagnostic> diags;
  PipelineConfig cfg = parse(doc, base_dir, diags, false);
  if (!diags.empty()) {
    std::string msg = "invalid config:";
    for (const auto& d : diags) msg += "\n  " + d.field + ": " + d.message;
    fail(ErrorKind::Config, msg);
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  return parse_config(parse_file(path), path.parent_path());
}

void override_seeds(PipelineConfig& cfg, std::uint64_t seed) {
  cfg.seeds = {seed, seed, seed, seed};
  for (auto& [tag, s] : cfg.range) s.bootstrap.seed = seed;
  cfg.source["seeds"] = {{"bootstrap", seed}, {"split", seed}, {"cv", seed}, {"model", seed}};
}

std::string config_hash(const PipelineConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(cfg.source.dump())));
  return buf;
}

}  // namespace cocoa
