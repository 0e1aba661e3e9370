#include <sstream>

#include "cocoa/config.hpp"
#include "cocoa/pipeline.hpp"
#include "cocoa/text.hpp"
#include "common.hpp"

using namespace cocoa;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

json small_config(const fs::path& data, const fs::path& runs) {
  json cfg = json::parse(R"({
    "ranges": ["vis", "nir"],
    "filter": {"mode": "topn", "tau": 0.25, "n": {"vis": 24, "nir": 24}},
    "bootstrap": {"vis": {"subset_size": 6, "realizations": 10},
                  "nir": {"subset_size": 6, "realizations": 10}},
    "split": {"test_batch_ids": [17, 18, 19, 20],
              "region_batch_ids": ["santander-0106", "huila-0606", "putumayo-1006", "cusco-1206"],
              "within_batch_test_fraction": 0.3},
    "models": [{"name": "knn", "spec": {"family": "knn"}, "grid": {"k": [1, 3]}},
               {"name": "forest", "spec": {"family": "forest", "trees": 5, "max_depth": 6}}],
    "cv": {"folds": 2},
    "seeds": {"bootstrap": 1, "split": 2, "cv": 3, "model": 4},
    "threads": 2
  })");
  cfg["paths"] = {{"manifest", (data / "manifest.txt").string()}, {"output", runs.string()}};
  return cfg;
}

fs::path write_config(const fs::path& dir, const std::string& name, const json& cfg) {
  const fs::path p = dir / name;
  text::write_file(p, cfg.dump(2));
  return p;
}

std::map<std::string, std::string> artifacts(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), root).string();
    if (rel == "run_log.jsonl" || rel == ".lock") continue;
    out[rel] = text::read_file(e.path());
  }
  return out;
}

// One small corpus shared by every test in this file.
const fs::path& corpus() {
  static oracle::TempDir dir("corpus");
  static const bool made = [] {
    const auto r = cli({"synth", "--out", (dir.path() / "data").string(), "--scans", "40", "--seed", "3"});
    REQUIRE(r.code == 0);
    return true;
  }();
  (void)made;
  static const fs::path data = dir.path() / "data";
  return data;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"no-such-command"}).code == kExitUsage);
  CHECK(cli({"pipeline"}).code == kExitUsage);
  CHECK(cli({"--range", "uv", "pipeline"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("validate reports field diagnostics") {
  const auto shipped = fs::path(COCOA_SOURCE_DIR) / "config";
  for (const char* name : {"default.json", "synthetic.json"}) {
    CHECK(validate_config_file(shipped / name).empty());
    const auto r = cli({"--config", (shipped / name).string(), "validate"});
    CHECK(r.code == 0);
    CHECK(r.out == "config ok\n");
  }

  oracle::TempDir dir("validate");
  json cfg = small_config(dir.path() / "missing", dir.path() / "runs");
  cfg["filter"]["tau"] = -0.25;
  cfg["bootstrap"]["nir"]["subset_size"] = 600;
  cfg.erase("seeds");
  cfg["paths"].erase("manifest");
  cfg["colour"] = "blue";
  std::set<std::string> fields;
  for (const auto& d : validate_config(cfg, dir.path())) fields.insert(d.field);
  CHECK(fields.count("filter.tau") == 1);
  CHECK(fields.count("paths.manifest") == 1);
  CHECK(fields.count("seeds") == 1);
  CHECK(fields.count("bootstrap.nir.subset_size") == 1);
  CHECK(fields.count("colour") == 1);

  const json ok = small_config(dir.path() / "missing", dir.path() / "runs");
  CHECK(validate_config(ok, dir.path()).empty());
  CHECK_FALSE(validate_config(ok, dir.path(), true).empty());
  const auto path = write_config(dir.path(), "ok.json", ok);
  CHECK(cli({"--config", path.string(), "validate", "--check-paths"}).code == kExitUsage);
  CHECK_KIND(parse_config(cfg, dir.path()), ErrorKind::Config);
}

TEST_CASE("an oversized bootstrap subset exits 1 naming the field") {
  oracle::TempDir dir("oversize");
  json cfg = small_config(corpus(), dir.path() / "runs");
  cfg["bootstrap"]["nir"]["subset_size"] = 600;
  cfg["filter"]["n"]["nir"] = 500;
  const auto r = cli({"--config", write_config(dir.path(), "c.json", cfg).string(), "pipeline"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("bootstrap.nir.subset_size") != std::string::npos);
}

TEST_CASE("pipeline equals the stages run one by one") {
  oracle::TempDir dir("stages");
  const json cfg = small_config(corpus(), dir.path() / "runs");
  const auto path = write_config(dir.path(), "c.json", cfg).string();
  const auto whole = dir.path() / "whole";
  const auto parts = dir.path() / "parts";
  REQUIRE(cli({"--config", path, "--out", whole.string(), "pipeline"}).code == 0);
  for (const char* stage : {"ingest", "filter", "calibrate", "bootstrap", "qc-pca", "train", "evaluate", "regions"}) {
    const auto r = cli({"--config", path, "--out", parts.string(), stage});
    REQUIRE_MESSAGE(r.code == 0, stage << ": " << r.err);
  }
  const auto a = artifacts(whole);
  CHECK(a == artifacts(parts));
  for (const char* f : {"evaluate/eval_report.csv", "evaluate/eval_report.txt", "regions/region_report.csv",
                        "qc/vis_pca_scores.csv", "qc/nir_pca.svg", "train/models/knn_nir_cadmium.cmdl",
                        "filter/vis_distances.csv", "bootstrap/nir_realizations.csv"}) {
    CHECK_MESSAGE(a.count(f) == 1, f);
  }

  const auto log = text::read_lines(whole / "run_log.jsonl");
  REQUIRE_FALSE(log.empty());
  bool hashed = false;
  for (const auto& line : log) {
    const json rec = json::parse(line);
    if (rec.contains("config_hash")) hashed = true;
  }
  CHECK(hashed);

  const auto before = artifacts(whole);
  const auto again = cli({"--config", path, "--out", whole.string(), "pipeline"});
  CHECK(again.code == kExitData);
  CHECK(artifacts(whole) == before);

  const auto other = dir.path() / "other";
  REQUIRE(cli({"--config", path, "--out", other.string(), "--seed", "99", "pipeline"}).code == 0);
  CHECK(text::read_file(other / "bootstrap/vis_realizations.csv") !=
        text::read_file(whole / "bootstrap/vis_realizations.csv"));

  const auto model = (whole / "train/models/knn_nir_moisture.cmdl").string();
  const auto input = (whole / "bootstrap/nir_realizations.csv").string();
  const auto pred = cli({"predict", "--model", model, "--input", input});
  REQUIRE(pred.code == 0);
  const auto rows = text::split(pred.out, '\n');
  CHECK(rows.front() == "batch_id,index,prediction");
  CHECK(rows.size() == text::read_lines(input).size() + 1);
  const auto out_file = dir.path() / "pred.csv";
  CHECK(cli({"predict", "--model", model, "--input", input, "--output", out_file.string()}).code == 0);
  CHECK(cli({"predict", "--model", model, "--input", input, "--output", out_file.string()}).code == kExitData);
  CHECK(cli({"predict", "--model", input, "--input", input}).code == kExitData);
  const auto vis = (whole / "bootstrap/vis_realizations.csv").string();
  CHECK(cli({"predict", "--model", model, "--input", vis}).code == kExitData);
}

TEST_CASE("a non-converged model exits 3") {
  oracle::TempDir dir("svr");
  json cfg = small_config(corpus(), dir.path() / "runs");
  cfg["ranges"] = {"nir"};
  cfg["models"] = json::array({json{{"name", "svr"}, {"spec", {{"family", "svr"}, {"max_iter", 1}}}}});
  const auto r = cli({"--config", write_config(dir.path(), "c.json", cfg).string(), "pipeline"});
  CHECK(r.code == kExitTraining);
  CHECK(fs::exists(dir.path() / "runs/evaluate/eval_report.csv"));
}

TEST_CASE("synth refuses to overwrite a corpus") {
  const auto r = cli({"synth", "--out", corpus().string()});
  CHECK(r.code == kExitData);
  CHECK(cli({"synth"}).code == kExitUsage);
}

TEST_CASE("missing and corrupt datasets") {
  oracle::TempDir dir("nodata");
  const json cfg = small_config(dir.path() / "absent", dir.path() / "runs");
  const auto missing = cli({"--config", write_config(dir.path(), "c.json", cfg).string(), "ingest"});
  CHECK(missing.code == kExitUsage);
  CHECK(missing.err.find("paths.manifest") != std::string::npos);

  fs::create_directories(dir.path() / "bad");
  text::write_file(dir.path() / "bad/manifest.txt", "not a manifest\n");
  const json bad = small_config(dir.path() / "bad", dir.path() / "runs2");
  CHECK(cli({"--config", write_config(dir.path(), "bad.json", bad).string(), "ingest"}).code == kExitData);
}
