#include <CLI11.hpp>

#include <ostream>

#include "cocoa/pipeline.hpp"
#include "cocoa/spectral_io.hpp"
#include "cocoa/synth.hpp"
#include "cocoa/text.hpp"

namespace cocoa {

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string range = "both";
  std::string out;
  std::optional<unsigned> threads;
};

PipelineConfig effective_config(const Options& o) {
  if (o.config.empty()) fail(ErrorKind::Config, "--config is required");
  PipelineConfig cfg = load_config(o.config);
  if (o.seed) override_seeds(cfg, *o.seed);
  if (o.range == "vis") cfg.ranges = {RangeTag::Vis};
  else if (o.range == "nir") cfg.ranges = {RangeTag::Nir};
  if (!o.out.empty()) cfg.output = o.out;
  if (o.threads) cfg.threads = *o.threads;
  return cfg;
}

int run_synth(const std::string& out_dir, const std::string& profile_path,
              std::optional<std::size_t> scans, std::optional<std::uint64_t> seed,
              std::optional<double> belt, std::optional<double> noise, bool no_regions,
              std::ostream& out) {
  if (out_dir.empty()) fail(ErrorKind::Config, "synth needs --out");
  nlohmann::json doc = nlohmann::json::object();
  if (!profile_path.empty()) {
    try {
      doc = nlohmann::json::parse(text::read_file(profile_path));
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorKind::Config, profile_path + ": " + e.what());
    }
  }
  std::vector<SynthProfile> profiles;
  for (RangeTag r : {RangeTag::Vis, RangeTag::Nir}) {
    const std::string key(to_string(r));
    SynthProfile p = synth_profile_from_json(doc.value(key, nlohmann::json::object()), r);
    if (belt) p.belt_fraction = *belt;
    if (noise) p.noise_sd = *noise;
    profiles.push_back(std::move(p));
  }
  CorpusOptions opt;
  opt.scans_per_batch = doc.value("scans_per_batch", opt.scans_per_batch);
  opt.seed = doc.value("seed", opt.seed);
  if (scans) opt.scans_per_batch = *scans;
  if (seed) opt.seed = *seed;
  std::vector<BatchRecord> labels = campaign_labels();
  if (!no_regions && doc.value("regions", true)) {
    for (auto& b : region_labels()) labels.push_back(std::move(b));
  }
  if (std::filesystem::exists(std::filesystem::path(out_dir) / kManifestName)) {
    fail(ErrorKind::Integrity, "a dataset already exists in " + out_dir);
  }
  const Dataset ds = generate_corpus(profiles, labels, opt);
  save_dataset(ds, out_dir);
  out << "wrote " << ds.batches.size() << " batches to " << out_dir << "\n";
  return kExitOk;
}

int run_predict(const std::string& model_path, const std::string& input,
                const std::string& output, std::ostream& out) {
  const LoadedModel lm = load_model(model_path);
  const auto rows = parse_table(text::read_file(input), lm.model.range(), input);
  if (rows.empty()) fail(ErrorKind::Data, input + " has no spectra");
  const Vector norm = lm.model.predict(to_matrix(rows));
  std::string csv = "batch_id,index,prediction\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    csv += rows[i].meta.batch_id + "," + std::to_string(rows[i].meta.scan_index) + "," +
           text::format_double(lm.scaler.inverse(lm.model.property(), norm[static_cast<Eigen::Index>(i)])) +
           "\n";
  }
  if (output.empty()) {
    out << csv;
  } else {
    if (std::filesystem::exists(output)) fail(ErrorKind::Integrity, "output exists: " + output);
    text::write_file(output, csv);
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral cocoa quality pipeline", "cocoaspec"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "Pipeline config (JSON)");
  app.add_option("--seed", o.seed, "Override every seed");
  app.add_option("--range", o.range, "vis, nir or both")->check(CLI::IsMember({"vis", "nir", "both"}));
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--threads", o.threads, "Worker threads (0: all cores)");

  const std::vector<std::pair<std::string, std::string>> stages = {
      {"ingest", "Load and check the dataset manifest"},
      {"filter", "Discard belt spectra by spectral angle"},
      {"calibrate", "Reflectance calibration and crop"},
      {"bootstrap", "Bootstrap subset means per batch"},
      {"qc-pca", "Two-component PCA of the realizations"},
      {"train", "Grid search and fit every model"},
      {"evaluate", "Metrics report on the held-out rows"},
      {"regions", "Cross-region generalization report"},
      {"pipeline", "Run every stage in order"}};
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : stages) subs[name] = app.add_subcommand(name, help);

  bool check_paths = false;
  auto* validate_cmd = app.add_subcommand("validate", "Check a config file");
  validate_cmd->add_flag("--check-paths", check_paths, "Also require the manifest to exist");

  std::string profile;
  std::optional<std::size_t> scans;
  std::optional<double> belt;
  std::optional<double> noise;
  bool no_regions = false;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic corpus");
  synth_cmd->add_option("--profile", profile, "Synthetic profile (JSON)");
  synth_cmd->add_option("--scans", scans, "Scans per batch and range");
  synth_cmd->add_option("--belt-fraction", belt, "Share of belt scans");
  synth_cmd->add_option("--noise", noise, "Reflectance noise standard deviation");
  synth_cmd->add_flag("--no-regions", no_regions, "Skip the four region batches");

  std::string model_path;
  std::string input;
  std::string output;
  auto* predict_cmd = app.add_subcommand("predict", "Predict with a saved model");
  predict_cmd->add_option("--model", model_path, "Model container")->required();
  predict_cmd->add_option("--input", input, "Spectra table")->required();
  predict_cmd->add_option("--output", output, "Output CSV (default: stdout)");

  std::vector<std::string> argv_store{"cocoaspec"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*validate_cmd) {
      if (o.config.empty()) fail(ErrorKind::Config, "--config is required");
      const auto diags = validate_config_file(o.config, check_paths);
      for (const auto& d : diags) out << d.field << ": " << d.message << "\n";
      if (diags.empty()) out << "config ok\n";
      return diags.empty() ? kExitOk : kExitUsage;
    }
    if (*synth_cmd) return run_synth(o.out, profile, scans, o.seed, belt, noise, no_regions, out);
    if (*predict_cmd) return run_predict(model_path, input, output, out);

    const PipelineConfig cfg = effective_config(o);
    RunDirectory run(cfg.output, cfg);
    int code = kExitOk;
    if (*subs["ingest"]) stage_ingest(cfg, run);
    else if (*subs["filter"]) stage_filter(cfg, run);
    else if (*subs["calibrate"]) stage_calibrate(cfg, run);
    else if (*subs["bootstrap"]) stage_bootstrap(cfg, run);
    else if (*subs["qc-pca"]) stage_qc_pca(cfg, run);
    else if (*subs["train"]) code = stage_train(cfg, run);
    else if (*subs["evaluate"]) stage_evaluate(cfg, run);
    else if (*subs["regions"]) stage_regions(cfg, run);
    else if (*subs["pipeline"]) code = run_pipeline(cfg, run);
    if (code == kExitTraining) err << "warning: a model did not converge; see run_log.jsonl\n";
    return code;
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace cocoa
