#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cocoa/types.hpp"

namespace cocoa {

struct BootstrapConfig {
  std::size_t subset_size = 50;
  std::size_t realizations = 1000;
  std::uint64_t seed = 0;
  bool with_replacement = false;
};

/// K band-wise means of random size-s subsets of one batch's spectra.
/// Realization k draws from a stream keyed on (seed, batch_id, k), so output
/// is identical for any `threads`.
std::vector<Spectrum> bootstrap_means(std::span<const Spectrum> spectra,
                                      const BootstrapConfig& cfg, unsigned threads = 1);

struct SplitPolicy {
  std::set<std::string> test_batch_ids;
  double within_batch_test_fraction = 0.3;
};

struct FeatureRow {
  std::string batch_id;
  RangeTag range = RangeTag::Vis;
  std::int64_t realization = 0;
  std::array<double, 4> targets{};  // indexed by Property
  bool held_out_batch = false;      // row comes from a batch reserved for testing

  friend bool operator==(const FeatureRow&, const FeatureRow&) = default;
};

struct DatasetSplit {
  RangeTag range = RangeTag::Vis;
  GridPtr grid;
  Matrix train_x;
  Matrix test_x;
  std::vector<FeatureRow> train_rows;
  std::vector<FeatureRow> test_rows;

  Vector train_targets(Property p) const;
  Vector test_targets(Property p) const;
};

/// Realizations grouped by batch id; map order fixes row order.
using BatchRealizations = std::map<std::string, std::vector<Spectrum>>;

DatasetSplit assemble_dataset(const BatchRealizations& per_batch,
                              std::span<const BatchRecord> labels, const SplitPolicy& policy,
                              std::uint64_t seed);

/// Min-max scaling per property fitted on the training rows.
class TargetScaler {
 public:
  TargetScaler() = default;
  TargetScaler(std::array<double, 4> min, std::array<double, 4> max);

  double forward(Property p, double value) const;
  double inverse(Property p, double value) const;
  double min(Property p) const { return min_[static_cast<std::size_t>(p)]; }
  double max(Property p) const { return max_[static_cast<std::size_t>(p)]; }
  double span(Property p) const { return max(p) - min(p); }

  friend bool operator==(const TargetScaler&, const TargetScaler&) = default;

 private:
  std::array<double, 4> min_{0, 0, 0, 0};
  std::array<double, 4> max_{1, 1, 1, 1};
};

struct NormalizedSplit {
  DatasetSplit split;
  TargetScaler scaler;
};

NormalizedSplit normalize_targets(const DatasetSplit& split);

}  // namespace cocoa
