#include "cocoa/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "cocoa/background_filter.hpp"
#include "cocoa/calibration.hpp"
#include "cocoa/decomposition.hpp"
#include "cocoa/rng.hpp"
#include "cocoa/spectral_io.hpp"
#include "cocoa/svg.hpp"
#include "cocoa/text.hpp"

namespace cocoa {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Fold:
      return kExitUsage;
    case ErrorKind::Divergence:
      return kExitTraining;
    default:
      return kExitData;
  }
}

RunDirectory::RunDirectory(fs::path dir, const PipelineConfig& cfg)
    : root_(std::move(dir)), lock_(root_ / ".lock"), config_hash_(config_hash(cfg)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) fail(ErrorKind::Io, "cannot create run directory " + root_.string() + ": " + ec.message());
  std::FILE* f = std::fopen(lock_.string().c_str(), "wx");
  if (!f) fail(ErrorKind::Integrity, "run directory " + root_.string() + " is locked by another run");
  std::fclose(f);
}

RunDirectory::~RunDirectory() {
  std::error_code ec;
  fs::remove(lock_, ec);
}

bool RunDirectory::exists(const std::string& rel) const { return fs::exists(root_ / rel); }

void RunDirectory::write(const std::string& rel, std::string_view content) {
  if (exists(rel)) fail(ErrorKind::Integrity, "artifact already exists: " + (root_ / rel).string());
  text::write_file(root_ / rel, content);
}

std::string RunDirectory::read(const std::string& rel) const {
  if (!exists(rel)) {
    fail(ErrorKind::Integrity, "missing artifact " + (root_ / rel).string() +
                                   "; run the earlier stage first");
  }
  return text::read_file(root_ / rel);
}

void RunDirectory::log(json record) {
  record["config_hash"] = config_hash_;
  std::ofstream out(root_ / "run_log.jsonl", std::ios::app);
  if (!out) fail(ErrorKind::Io, "cannot append to run log in " + root_.string());
  out << record.dump() << '\n';
}

std::string format_table(std::span<const Spectrum> rows) {
  std::string out = "batch_id,index";
  if (!rows.empty()) {
    for (double w : rows.front().grid->values()) out += "," + text::format_double(w);
  }
  out += '\n';
  for (const auto& s : rows) {
    out += s.meta.batch_id;
    out += ',';
    out += std::to_string(s.meta.scan_index);
    for (double v : s.values) {
      out += ',';
      out += text::format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<Spectrum> parse_table(std::string_view body, RangeTag range, const std::string& context) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos < body.size();) {
    std::size_t end = body.find('\n', pos);
    if (end == std::string_view::npos) end = body.size();
    std::string_view line = text::trim(body.substr(pos, end - pos));
    if (!line.empty()) lines.push_back(line);
    pos = end + 1;
  }
  if (lines.empty()) fail(ErrorKind::Parse, context + ": empty table");
  const auto header = text::split(lines.front());
  if (header.size() < 2 || header[0] != "batch_id" || header[1] != "index") {
    fail(ErrorKind::Schema, context + ": header must start with batch_id,index");
  }
  std::vector<double> wl;
  for (std::size_t i = 2; i < header.size(); ++i) {
    wl.push_back(text::parse_double(header[i], context + " header"));
  }
  std::vector<Spectrum> out;
  if (lines.size() == 1) return out;
  if (wl.empty()) fail(ErrorKind::Schema, context + ": table has no bands");
  const GridPtr grid = make_grid(wl, range);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto f = text::split(lines[r]);
    const std::string where = context + " row " + std::to_string(r);
    if (f.size() != wl.size() + 2) {
      fail(ErrorKind::Dimension, where + ": expected " + std::to_string(wl.size()) +
                                     " bands, got " + std::to_string(f.size() - std::min<std::size_t>(f.size(), 2)));
    }
    Spectrum s{grid, std::vector<double>(wl.size()), SpectrumKind::Reflectance,
               {std::string(f[0]), text::parse_int(f[1], where), std::nullopt}};
    for (std::size_t i = 0; i < wl.size(); ++i) s.values[i] = text::parse_double(f[i + 2], where);
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

std::string rname(RangeTag r) { return std::string(to_string(r)); }

json seeds_json(const PipelineConfig& cfg) {
  return {{"bootstrap", cfg.seeds.bootstrap},
          {"split", cfg.seeds.split},
          {"cv", cfg.seeds.cv},
          {"model", cfg.seeds.model}};
}

void require_manifest(const PipelineConfig& cfg) {
  if (!fs::exists(cfg.manifest)) {
    fail(ErrorKind::Config, "paths.manifest: file not found: " + cfg.manifest.string());
  }
}

std::vector<BatchRecord> manifest_labels(const PipelineConfig& cfg) {
  require_manifest(cfg);
  const DatasetManifest m = load_manifest(cfg.manifest);
  return load_labels(m.root / m.labels);
}

std::map<std::string, std::vector<Spectrum>> group_by_batch(std::vector<Spectrum> rows) {
  std::map<std::string, std::vector<Spectrum>> out;
  for (auto& s : rows) out[s.meta.batch_id].push_back(std::move(s));
  return out;
}

std::vector<Spectrum> realizations(const RunDirectory& run, RangeTag r) {
  const std::string rel = "bootstrap/" + rname(r) + "_realizations.csv";
  return parse_table(run.read(rel), r, rel);
}

template <typename F>
void parallel_for(std::size_t tasks, unsigned threads, F&& body) {
  std::vector<std::exception_ptr> errors(tasks);
  auto run = [&](std::size_t t) {
    try {
      body(t);
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(tasks)));
  if (workers == 1) {
    for (std::size_t t = 0; t < tasks; ++t) run(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < tasks; t = next++) run(t);
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

ModelSpec seeded(const ModelConfig& m, const PipelineConfig& cfg, RangeTag r, Property p) {
  ModelSpec spec = m.spec;
  if (m.seed_given) return spec;
  const std::uint64_t seed = derive_key(cfg.seeds.model, fnv1a64(m.name),
                                        static_cast<std::uint64_t>(r) * 4 + static_cast<std::uint64_t>(p));
  if (auto* f = std::get_if<ForestSpec>(&spec)) f->seed = seed;
  if (auto* n = std::get_if<NetworkSpec>(&spec)) n->seed = seed;
  return spec;
}

std::vector<LoadedModel> load_models(const PipelineConfig& cfg, const RunDirectory& run, RangeTag r) {
  std::vector<LoadedModel> out;
  for (const auto& m : cfg.models) {
    for (Property p : kAllProperties) {
      const std::string rel = "train/models/" + model_file(m.name, r, p);
      out.push_back(decode_model(run.read(rel)));
    }
  }
  return out;
}

}  // namespace

std::string model_file(const std::string& name, RangeTag range, Property p) {
  return name + "_" + rname(range) + "_" + std::string(to_string(p)) + ".cmdl";
}

void stage_ingest(const PipelineConfig& cfg, RunDirectory& run) {
  require_manifest(cfg);
  const Dataset ds = load_dataset(cfg.manifest);
  std::string csv = "batch_id,region,range,scans,bands,white,black,belt_references\n";
  std::size_t scans = 0;
  for (const auto& b : ds.batches) {
    for (const auto& [r, rd] : b.ranges) {
      csv += b.batch_id + "," + b.region + "," + rname(r) + "," + std::to_string(rd.scans.size()) +
             "," + std::to_string(rd.grid->size()) + "," + (rd.white ? "1" : "0") + "," +
             (rd.black ? "1" : "0") + "," + std::to_string(rd.belt.size()) + "\n";
      scans += rd.scans.size();
    }
  }
  run.write("ingest/summary.csv", csv);
  run.log({{"stage", "ingest"}, {"batches", ds.batches.size()}, {"labels", ds.labels.size()},
           {"scans", scans}});
}

void stage_filter(const PipelineConfig& cfg, RunDirectory& run) {
  require_manifest(cfg);
  const Dataset ds = load_dataset(cfg.manifest);
  for (RangeTag r : cfg.ranges) {
    const RangeSettings& s = cfg.settings(r);
    std::string dist = "batch_id,index,distance,kept\n";
    std::string kept = "batch_id,index\n";
    std::size_t rows_in = 0;
    std::size_t rows_out = 0;
    json warnings = json::array();
    for (const auto& b : ds.batches) {
      const auto it = b.ranges.find(r);
      if (it == b.ranges.end()) continue;
      const RangeData& rd = it->second;
      if (rd.belt.empty()) {
        fail(ErrorKind::Integrity, "batch " + b.batch_id + " has no " + rname(r) + " belt references");
      }
      const ReferenceSet refs(rd.belt);
      FilterResult fr;
      if (cfg.filter_mode == FilterMode::TopN) {
        fr = filter(rd.scans, refs, TopNPolicy{s.filter_n});
      } else {
        fr = filter(rd.scans, refs, ThresholdPolicy{cfg.tau});
        if (cfg.filter_mode == FilterMode::ThresholdThenTopN) {
          std::vector<double> d;
          std::vector<std::int64_t> idx;
          std::vector<std::size_t> pos;
          for (std::size_t i = 0; i < rd.scans.size(); ++i) {
            if (!fr.kept_flags[i]) continue;
            d.push_back(fr.distances[i]);
            idx.push_back(rd.scans[i].meta.scan_index);
            pos.push_back(i);
          }
          if (pos.size() < s.filter_n) {
            fr.warnings.push_back(std::to_string(pos.size()) + " spectra pass the threshold, fewer than n=" +
                                  std::to_string(s.filter_n));
          }
          const auto top = select_top_n(d, idx, s.filter_n);
          for (std::size_t k = 0; k < pos.size(); ++k) fr.kept_flags[pos[k]] = top[k];
        }
      }
      for (const auto& w : fr.warnings) warnings.push_back(b.batch_id + ": " + w);
      for (std::size_t i = 0; i < rd.scans.size(); ++i) {
        const std::string id = b.batch_id + "," + std::to_string(rd.scans[i].meta.scan_index);
        dist += id + "," + text::format_double(fr.distances[i]) + "," + (fr.kept_flags[i] ? "1" : "0") + "\n";
        if (fr.kept_flags[i]) {
          kept += id + "\n";
          ++rows_out;
        }
      }
      rows_in += rd.scans.size();
    }
    run.write("filter/" + rname(r) + "_distances.csv", dist);
    run.write("filter/" + rname(r) + "_kept.csv", kept);
    run.log({{"stage", "filter"}, {"range", rname(r)}, {"rows_in", rows_in}, {"rows_out", rows_out},
             {"warnings", warnings}});
  }
}

void stage_calibrate(const PipelineConfig& cfg, RunDirectory& run) {
  require_manifest(cfg);
  const Dataset ds = load_dataset(cfg.manifest);
  for (RangeTag r : cfg.ranges) {
    const std::string kept_rel = "filter/" + rname(r) + "_kept.csv";
    std::map<std::string, std::set<std::int64_t>> kept;
    {
      const std::string body = run.read(kept_rel);
      std::istringstream in(body);
      std::string line;
      std::getline(in, line);
      std::size_t row = 0;
      while (std::getline(in, line)) {
        ++row;
        if (text::trim(line).empty()) continue;
        const auto f = text::split(line);
        if (f.size() != 2) fail(ErrorKind::Parse, kept_rel + " row " + std::to_string(row) + ": expected 2 fields");
        kept[std::string(f[0])].insert(text::parse_int(f[1], kept_rel));
      }
    }
    std::vector<MaskedSpectrum> refl;
    BandMask mask;
    GridPtr grid;
    for (const auto& b : ds.batches) {
      const auto it = b.ranges.find(r);
      const auto ks = kept.find(b.batch_id);
      if (it == b.ranges.end() || ks == kept.end()) continue;
      const RangeData& rd = it->second;
      if (!rd.white || !rd.black) {
        fail(ErrorKind::Integrity, "batch " + b.batch_id + " lacks " + rname(r) + " white/black references");
      }
      if (grid && !same_grid(grid, rd.grid)) {
        fail(ErrorKind::Dimension, "batch " + b.batch_id + " uses a different " + rname(r) + " grid");
      }
      grid = rd.grid;
      if (mask.empty()) mask = BandMask(grid->size());
      const CalibrationPair cal{*rd.white, *rd.black};
      for (const auto& scan : rd.scans) {
        if (!ks->second.contains(scan.meta.scan_index)) continue;
        BandMask sat;
        if (cfg.saturation_ceiling) sat = mask_saturated(scan, *cfg.saturation_ceiling).mask;
        MaskedSpectrum m = compute_reflectance(scan, cal, sat);
        mask.merge(m.mask);
        refl.push_back(std::move(m));
      }
    }
    std::vector<Spectrum> rows;
    std::size_t bands_out = 0;
    if (grid) {
      const CropWindow window = cfg.settings(r).crop;
      const BandMask cropped_mask = crop(mask, *grid, window);
      if (cropped_mask.count() == cropped_mask.size()) {
        fail(ErrorKind::DegenerateCalibration, "every " + rname(r) + " band in the crop window is masked");
      }
      for (const auto& m : refl) rows.push_back(drop_bands(crop(m.spectrum, window), cropped_mask));
      bands_out = cropped_mask.size() - cropped_mask.count();
    }
    run.write("calibrate/" + rname(r) + "_reflectance.csv", format_table(rows));
    run.log({{"stage", "calibrate"}, {"range", rname(r)}, {"rows_out", rows.size()},
             {"bands_in", grid ? grid->size() : 0}, {"bands_out", bands_out},
             {"masked_bands", mask.count()}});
  }
}

void stage_bootstrap(const PipelineConfig& cfg, RunDirectory& run) {
  for (RangeTag r : cfg.ranges) {
    const std::string rel = "calibrate/" + rname(r) + "_reflectance.csv";
    const auto batches = group_by_batch(parse_table(run.read(rel), r, rel));
    const BootstrapConfig& bc = cfg.settings(r).bootstrap;
    std::vector<Spectrum> out;
    std::size_t rows_in = 0;
    for (const auto& [id, spectra] : batches) {
      if (!bc.with_replacement && spectra.size() < bc.subset_size) {
        fail(ErrorKind::Config, "bootstrap." + rname(r) + ".subset_size: subset size " +
                                    std::to_string(bc.subset_size) + " exceeds the " +
                                    std::to_string(spectra.size()) + " spectra of batch " + id);
      }
      rows_in += spectra.size();
      auto means = bootstrap_means(spectra, bc, cfg.worker_threads());
      for (auto& m : means) out.push_back(std::move(m));
    }
    run.write("bootstrap/" + rname(r) + "_realizations.csv", format_table(out));
    run.log({{"stage", "bootstrap"}, {"range", rname(r)}, {"rows_in", rows_in},
             {"rows_out", out.size()}, {"subset_size", bc.subset_size},
             {"realizations", bc.realizations}, {"seeds", seeds_json(cfg)}});
  }
}

void stage_qc_pca(const PipelineConfig& cfg, RunDirectory& run) {
  for (RangeTag r : cfg.ranges) {
    const auto rows = realizations(run, r);
    if (rows.size() < 3) {
      run.log({{"stage", "qc-pca"}, {"range", rname(r)}, {"skipped", "fewer than 3 realizations"}});
      continue;
    }
    const Matrix x = to_matrix(rows);
    const PcaModel pca = fit_pca(x, 2);
    const Matrix scores = project(pca, x);
    std::string sc = "batch_id,realization,pc1,pc2\n";
    std::map<std::string, ScatterSeries> series;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      sc += rows[i].meta.batch_id + "," + std::to_string(rows[i].meta.scan_index) + "," +
            text::format_double(scores(ii, 0)) + "," + text::format_double(scores(ii, 1)) + "\n";
      auto& s = series[rows[i].meta.batch_id];
      s.label = "batch " + rows[i].meta.batch_id;
      s.x.push_back(scores(ii, 0));
      s.y.push_back(scores(ii, 1));
    }
    std::string ld = "wavelength,pc1,pc2\n";
    const auto& wl = rows.front().grid->values();
    for (std::size_t b = 0; b < wl.size(); ++b) {
      const auto bb = static_cast<Eigen::Index>(b);
      ld += text::format_double(wl[b]) + "," + text::format_double(pca.components(0, bb)) + "," +
            text::format_double(pca.components(1, bb)) + "\n";
    }
    const double total = (x.rowwise() - pca.mean.transpose()).squaredNorm() /
                         static_cast<double>(x.rows() - 1);
    std::string ev = "component,explained_variance,ratio\n";
    for (Eigen::Index k = 0; k < pca.k(); ++k) {
      ev += "pc" + std::to_string(k + 1) + "," + text::format_double(pca.explained_variance[k]) +
            "," + text::format_double(pca.explained_variance[k] / total) + "\n";
    }
    run.write("qc/" + rname(r) + "_pca_scores.csv", sc);
    run.write("qc/" + rname(r) + "_pca_loadings.csv", ld);
    run.write("qc/" + rname(r) + "_pca_variance.csv", ev);
    if (cfg.report.plots) {
      std::vector<ScatterSeries> list;
      for (auto& [id, s] : series) list.push_back(std::move(s));
      run.write("qc/" + rname(r) + "_pca.svg",
                svg_scatter(list, "PCA of bootstrapped " + rname(r) + " reflectance", "PC1", "PC2"));
    }
    run.log({{"stage", "qc-pca"}, {"range", rname(r)}, {"rows_in", rows.size()}});
  }
}

NormalizedSplit load_split(const PipelineConfig& cfg, const RunDirectory& run, RangeTag range) {
  BatchRealizations per_batch = group_by_batch(realizations(run, range));
  for (const auto& id : cfg.region_batch_ids) per_batch.erase(id);
  const auto labels = manifest_labels(cfg);
  return normalize_targets(assemble_dataset(per_batch, labels, cfg.split, cfg.seeds.split));
}

int stage_train(const PipelineConfig& cfg, RunDirectory& run) {
  int code = kExitOk;
  for (RangeTag r : cfg.ranges) {
    const NormalizedSplit ns = load_split(cfg, run, r);
    const DatasetSplit& sp = ns.split;
    std::string split_csv = "batch_id,realization,set,held_out_batch\n";
    for (const auto& row : sp.train_rows) {
      split_csv += row.batch_id + "," + std::to_string(row.realization) + ",train,0\n";
    }
    for (const auto& row : sp.test_rows) {
      split_csv += row.batch_id + "," + std::to_string(row.realization) + ",test," +
                   (row.held_out_batch ? "1" : "0") + "\n";
    }
    run.write("train/" + rname(r) + "_split.csv", split_csv);
    std::size_t leaked = 0;
    for (const auto& row : sp.train_rows) leaked += cfg.split.test_batch_ids.contains(row.batch_id);
    if (leaked > 0) fail(ErrorKind::Integrity, "held-out batches leaked into the training rows");

    struct Task {
      const ModelConfig* model;
      Property property;
      std::string cv_csv;
      std::string container;
      std::vector<std::string> warnings;
      json best;
    };
    std::vector<Task> tasks;
    for (const auto& m : cfg.models) {
      for (Property p : kAllProperties) tasks.push_back({&m, p, {}, {}, {}, {}});
    }
    const unsigned threads = cfg.worker_threads();
    const unsigned inner = std::max(1u, threads / static_cast<unsigned>(tasks.size()));
    parallel_for(tasks.size(), threads, [&](std::size_t t) {
      Task& task = tasks[t];
      const ModelConfig& m = *task.model;
      const ModelSpec spec = seeded(m, cfg, r, task.property);
      const Vector y = sp.train_targets(task.property);
      ModelSpec best = spec;
      if (!m.search.grid.empty()) {
        const std::uint64_t cv_seed = derive_key(cfg.seeds.cv, fnv1a64(m.name),
                                                 static_cast<std::uint64_t>(r) * 4 +
                                                     static_cast<std::uint64_t>(task.property));
        const GridSearchResult gs = grid_search_cv(spec, m.search, sp.train_x, y, cv_seed, inner);
        best = gs.best;
        std::string csv;
        for (const auto& [name, _] : gs.table.front().params) csv += name + ",";
        for (std::size_t f = 0; f < gs.table.front().fold_mse.size(); ++f) {
          csv += "fold" + std::to_string(f + 1) + "_mse,";
        }
        csv += "mean_mse,selected\n";
        for (std::size_t g = 0; g < gs.table.size(); ++g) {
          const CvRow& row = gs.table[g];
          for (const auto& [_, v] : row.params) csv += text::format_double(v) + ",";
          for (double v : row.fold_mse) csv += text::format_double(v) + ",";
          csv += (std::isnan(row.mean_mse) ? std::string("nan") : text::format_double(row.mean_mse)) +
                 "," + (g == gs.best_index ? "1" : "0") + "\n";
        }
        task.cv_csv = std::move(csv);
      }
      const TrainedModel model = fit(best, sp.train_x, y, task.property, r);
      task.warnings = model.warnings();
      task.container = encode_model(model, ns.scaler);
      task.best = to_json(best);
    });
    for (const auto& task : tasks) {
      const std::string base = task.model->name + "_" + rname(r) + "_" + std::string(to_string(task.property));
      if (!task.cv_csv.empty()) run.write("train/cv/" + base + ".csv", task.cv_csv);
      run.write("train/models/" + model_file(task.model->name, r, task.property), task.container);
      run.log({{"stage", "train"}, {"range", rname(r)}, {"model", task.model->name},
               {"property", to_string(task.property)}, {"train_rows", sp.train_rows.size()},
               {"test_rows", sp.test_rows.size()}, {"spec", task.best}, {"warnings", task.warnings},
               {"seeds", seeds_json(cfg)}});
      if (!task.warnings.empty()) code = kExitTraining;
    }
  }
  return code;
}

EvalReport stage_evaluate(const PipelineConfig& cfg, RunDirectory& run) {
  EvalReport total;
  for (RangeTag r : cfg.ranges) {
    const NormalizedSplit ns = load_split(cfg, run, r);
    const auto loaded = load_models(cfg, run, r);
    std::vector<TrainedModel> models;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < loaded.size(); ++i) {
      if (!(loaded[i].scaler == ns.scaler)) {
        fail(ErrorKind::Integrity, "model target scaling does not match the rebuilt split");
      }
      models.push_back(loaded[i].model);
    }
    EvalOptions opt;
    opt.include_train_rows = cfg.report.train_rows;
    opt.include_gaps = true;
    EvalReport rep = evaluate_suite(models, ns.split, ns.scaler, opt);
    // Configured names disambiguate several entries of one family.
    std::size_t at = 0;
    for (std::size_t i = 0; i < models.size(); ++i) {
      const std::string label = model_label(models[i].spec());
      const std::string& name = cfg.models[i / kAllProperties.size()].name;
      while (at < rep.rows.size() && !rep.rows[at].gap && rep.rows[at].model == label &&
             rep.rows[at].property == models[i].property()) {
        if (name != family_name(models[i].spec())) rep.rows[at].model = label + ":" + name;
        ++at;
      }
    }
    for (auto& row : rep.rows) total.rows.push_back(std::move(row));
  }
  mark_rankings(total);
  run.write("evaluate/eval_report.csv", report_csv(total));
  std::string txt;
  for (std::string_view subset : {kSubsetRealizations, kSubsetBatches, kSubsetAll}) {
    txt += report_text(total, subset) + "\n";
  }
  run.write("evaluate/eval_report.txt", txt);
  std::size_t n = 0;
  for (const auto& row : total.rows) n += !row.gap;
  run.log({{"stage", "evaluate"}, {"rows", n}, {"seeds", seeds_json(cfg)}});
  return total;
}

void stage_regions(const PipelineConfig& cfg, RunDirectory& run) {
  if (cfg.region_batch_ids.empty()) {
    run.log({{"stage", "regions"}, {"skipped", "no region batches configured"}});
    return;
  }
  RegionBatches batches;
  std::vector<LoadedModel> models;
  for (const auto& id : cfg.region_batch_ids) batches[id];
  for (RangeTag r : cfg.ranges) {
    auto grouped = group_by_batch(realizations(run, r));
    for (const auto& id : cfg.region_batch_ids) {
      const auto it = grouped.find(id);
      if (it != grouped.end()) batches[id][r] = to_matrix(it->second);
    }
    for (auto& m : load_models(cfg, run, r)) models.push_back(std::move(m));
  }
  const auto labels = manifest_labels(cfg);
  const RegionReport rep = region_generalization(models, batches, labels);
  run.write("regions/region_report.csv", region_csv(rep));
  run.write("regions/region_report.txt", region_text(rep));
  if (cfg.report.plots) {
    for (const auto& id : cfg.region_batch_ids) run.write("regions/" + id + ".svg", svg_region_bars(rep, id));
  }
  run.log({{"stage", "regions"}, {"batches", cfg.region_batch_ids.size()}, {"cells", rep.cells.size()}});
}

int run_pipeline(const PipelineConfig& cfg, RunDirectory& run) {
  run.log({{"stage", "pipeline"}, {"seeds", seeds_json(cfg)}, {"config", cfg.source}});
  stage_ingest(cfg, run);
  stage_filter(cfg, run);
  stage_calibrate(cfg, run);
  stage_bootstrap(cfg, run);
  stage_qc_pca(cfg, run);
  const int code = stage_train(cfg, run);
  stage_evaluate(cfg, run);
  stage_regions(cfg, run);
  return code;
}

}  // namespace cocoa
