#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cocoa/types.hpp"

namespace cocoa {

inline constexpr std::string_view kLabelHeader =
    "batch_id,date,region,country,fermentation_pct,moisture_pct,cadmium_mgkg,polyphenols_mgg,"
    "fermentation_hours";

inline constexpr double kCadmiumDetectionLimit = 0.09;

/// Companion grid file: one wavelength per line.
WavelengthGrid load_grid(const std::filesystem::path& path, RangeTag tag);
void save_grid(const std::filesystem::path& path, const WavelengthGrid& grid);

/// Comma-delimited scans, one per row: scan index then band values in grid order.
/// Parse errors and width mismatches name the 1-based data row.
std::vector<Spectrum> load_scans(const std::filesystem::path& path, const GridPtr& grid,
                                 const std::string& batch_id = {});
void save_scans(const std::filesystem::path& path, std::span<const Spectrum> scans);

std::vector<BatchRecord> load_labels(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path, std::span<const BatchRecord> records);

/// Cut-test fermentation ratio (premium + standard) / total.
double fermentation_ratio(long long premium, long long standard, long long total);

/// Everything recorded for one batch in one spectral range.
struct RangeData {
  GridPtr grid;
  std::vector<Spectrum> scans;
  std::optional<Spectrum> white;
  std::optional<Spectrum> black;
  std::vector<Spectrum> belt;  // known background spectra

  friend bool operator==(const RangeData& a, const RangeData& b);
};

struct BatchEntry {
  std::string batch_id;
  std::string region;
  std::map<RangeTag, RangeData> ranges;

  friend bool operator==(const BatchEntry&, const BatchEntry&) = default;
};

struct Dataset {
  std::vector<BatchRecord> labels;
  std::vector<BatchEntry> batches;

  const BatchRecord* label(const std::string& batch_id) const;
  const BatchEntry* batch(const std::string& batch_id) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct ManifestRangeFiles {
  std::filesystem::path grid;
  std::filesystem::path scans;
  std::optional<std::filesystem::path> white;
  std::optional<std::filesystem::path> black;
  std::optional<std::filesystem::path> belt;
};

struct ManifestEntry {
  std::string batch_id;
  std::string region;
  std::map<RangeTag, ManifestRangeFiles> ranges;
};

struct DatasetManifest {
  std::filesystem::path root;  // directory that relative paths resolve against
  std::filesystem::path labels;
  std::vector<ManifestEntry> entries;
};

inline constexpr std::string_view kManifestName = "manifest.txt";

/// Writes labels, grids, scans and references under `dir` plus a key-value
/// manifest, and returns the manifest. Numbers are written in shortest
/// round-trip form so that load_dataset(save_dataset(d)) == d.
DatasetManifest save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Accepts the dataset directory or the manifest file itself.
DatasetManifest load_manifest(const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace cocoa
