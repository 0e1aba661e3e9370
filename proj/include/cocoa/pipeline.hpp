#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "cocoa/config.hpp"
#include "cocoa/error.hpp"
#include "cocoa/evaluation.hpp"

namespace cocoa {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitTraining = 3;

int exit_code_for(ErrorKind kind);

/// A run directory owned by one process. Artifacts are append-only: writing
/// an existing file is an integrity error.
class RunDirectory {
 public:
  RunDirectory(std::filesystem::path dir, const PipelineConfig& cfg);
  ~RunDirectory();
  RunDirectory(const RunDirectory&) = delete;
  RunDirectory& operator=(const RunDirectory&) = delete;

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path path(const std::string& rel) const { return root_ / rel; }
  bool exists(const std::string& rel) const;
  void write(const std::string& rel, std::string_view content);
  std::string read(const std::string& rel) const;
  /// Appends one JSON line to run_log.jsonl.
  void log(nlohmann::json record);

 private:
  std::filesystem::path root_;
  std::filesystem::path lock_;
  std::string config_hash_;
};

/// Spectra table: `batch_id,index,<wavelength>...` then one row per spectrum.
std::string format_table(std::span<const Spectrum> rows);
std::vector<Spectrum> parse_table(std::string_view body, RangeTag range,
                                  const std::string& context);

void stage_ingest(const PipelineConfig& cfg, RunDirectory& run);
void stage_filter(const PipelineConfig& cfg, RunDirectory& run);
void stage_calibrate(const PipelineConfig& cfg, RunDirectory& run);
void stage_bootstrap(const PipelineConfig& cfg, RunDirectory& run);
void stage_qc_pca(const PipelineConfig& cfg, RunDirectory& run);
/// Returns kExitTraining when a model finished with convergence warnings.
int stage_train(const PipelineConfig& cfg, RunDirectory& run);
EvalReport stage_evaluate(const PipelineConfig& cfg, RunDirectory& run);
void stage_regions(const PipelineConfig& cfg, RunDirectory& run);

/// ingest, filter, calibrate and crop, bootstrap, qc-pca, train, evaluate,
/// regions.
int run_pipeline(const PipelineConfig& cfg, RunDirectory& run);

/// Held-out split of one range rebuilt from the bootstrap artifacts.
NormalizedSplit load_split(const PipelineConfig& cfg, const RunDirectory& run, RangeTag range);

std::string model_file(const std::string& name, RangeTag range, Property p);

/// Entry point shared by the executable and the Python module.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cocoa
