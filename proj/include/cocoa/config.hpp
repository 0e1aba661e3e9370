#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cocoa/calibration.hpp"
#include "cocoa/model_spec.hpp"
#include "cocoa/regression.hpp"
#include "cocoa/resampling.hpp"

namespace cocoa {

enum class FilterMode { TopN, Threshold, ThresholdThenTopN };

struct RangeSettings {
  CropWindow crop;
  std::size_t filter_n = 0;
  BootstrapConfig bootstrap;
};

struct ModelConfig {
  std::string name;
  ModelSpec spec;
  GridSearchConfig search;  // empty grid: fit the spec as given
  bool seed_given = false;  // spec JSON carried its own seed
};

struct Seeds {
  std::uint64_t bootstrap = 1;
  std::uint64_t split = 2;
  std::uint64_t cv = 3;
  std::uint64_t model = 4;
};

struct ReportOptions {
  bool train_rows = true;
  bool plots = true;
};

struct PipelineConfig {
  std::filesystem::path manifest;
  std::filesystem::path output;
  std::vector<RangeTag> ranges;
  std::map<RangeTag, RangeSettings> range;
  std::optional<double> saturation_ceiling;  // raw detector counts; unset: no masking
  FilterMode filter_mode = FilterMode::TopN;
  double tau = 0.25;
  SplitPolicy split;
  std::vector<std::string> region_batch_ids;
  std::vector<ModelConfig> models;
  std::size_t cv_folds = 5;
  Seeds seeds;
  ReportOptions report;
  unsigned threads = 0;  // 0: hardware concurrency
  nlohmann::json source;  // effective config, hashed into the run log

  unsigned worker_threads() const;
  const RangeSettings& settings(RangeTag r) const { return range.at(r); }
};

struct Diagnostic {
  std::string field;
  std::string message;
};

/// Field-level problems with a config document; empty when valid. Paths are
/// resolved against `base_dir`; with `check_paths` the manifest must exist.
std::vector<Diagnostic> validate_config(const nlohmann::json& doc,
                                        const std::filesystem::path& base_dir = {},
                                        bool check_paths = false);
std::vector<Diagnostic> validate_config_file(const std::filesystem::path& path,
                                             bool check_paths = false);

/// Parses a validated document; throws Config listing every diagnostic.
PipelineConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

/// Every seed replaced by `seed`.
void override_seeds(PipelineConfig& cfg, std::uint64_t seed);

std::string config_hash(const PipelineConfig& cfg);

}  // namespace cocoa
