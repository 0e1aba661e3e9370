#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cocoa/calibration.hpp"
#include "cocoa/spectral_io.hpp"
#include "cocoa/types.hpp"

namespace cocoa {

struct GaussianBand {
  std::string name;
  double center = 0.0;     // nm
  double width = 10.0;     // nm (standard deviation)
  double amplitude = 0.0;  // reflectance units; negative for absorption
};

enum class LinkMode { Amplitude, Shift };

/// Moves one named band in proportion to a normalized property value
/// t = (value - lo) / (hi - lo).
struct PropertyLink {
  Property property = Property::Fermentation;
  std::string band;
  LinkMode mode = LinkMode::Amplitude;
  double lo = 0.0;
  double hi = 1.0;
  double gain = 0.1;  // reflectance (Amplitude) or nm (Shift) per unit t
};

struct SynthProfile {
  GridPtr grid;
  double baseline_start = 0.1;  // reflectance ramp at the first band
  double baseline_end = 0.6;    // and at the last band
  std::vector<GaussianBand> bands;
  std::vector<PropertyLink> links;
  double noise_sd = 0.01;      // additive reflectance noise per band
  double scan_gain_sd = 0.0;   // multiplicative per-scan variation
  double belt_fraction = 0.0;  // share of scans that image the belt
  double belt_level = 0.25;    // flat belt reflectance
  std::size_t belt_references = 5;
  double white_floor = 800.0;  // lamp: floor + peak * gaussian(center, width)
  double white_peak = 3200.0;
  double white_center = 650.0;
  double white_width = 200.0;
  double black_level = 100.0;
};

SynthProfile default_profile(RangeTag range);

nlohmann::json to_json(const SynthProfile& profile);
SynthProfile synth_profile_from_json(const nlohmann::json& j, RangeTag range);

/// Label-perturbed bean reflectance, clipped to [0, 1].
Vector bean_reflectance(const SynthProfile& profile, const BatchRecord& labels);

struct SynthBatch {
  std::vector<Spectrum> scans;  // intensity
  std::vector<bool> is_belt;
  CalibrationPair calibration;
  std::vector<Spectrum> belt_references;
};

SynthBatch generate_batch(const SynthProfile& profile, const BatchRecord& labels,
                          std::size_t n_scans, std::uint64_t seed);

/// Batches 1..20 with the lab values of the training campaign.
std::vector<BatchRecord> campaign_labels();
/// The four cross-region batches.
std::vector<BatchRecord> region_labels();

struct CorpusOptions {
  std::size_t scans_per_batch = 150;
  std::uint64_t seed = 0;
};

Dataset generate_corpus(const std::vector<SynthProfile>& profiles,
                        const std::vector<BatchRecord>& labels, const CorpusOptions& options);

}  // namespace cocoa
