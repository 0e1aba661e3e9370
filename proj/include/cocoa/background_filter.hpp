#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cocoa/types.hpp"

namespace cocoa {

/// Spectral angle arccos(<a,b> / (|a||b|)) in radians, in [0, pi].
double sam_angle(std::span<const double> a, std::span<const double> b);
double sam_angle(const Spectrum& a, const Spectrum& b);

/// Known background (conveyor belt) spectra.
class ReferenceSet {
 public:
  explicit ReferenceSet(std::vector<Spectrum> refs);

  std::span<const Spectrum> refs() const { return refs_; }

 private:
  std::vector<Spectrum> refs_;
};

/// Smallest angle to any reference: how belt-like the spectrum is.
double distance_to_background(const Spectrum& s, const ReferenceSet& refs);

struct ThresholdPolicy {
  double tau = 0.25;  // radians; keep when distance >= tau
};

struct TopNPolicy {
  std::size_t n = 0;  // keep the n largest distances
};

using FilterPolicy = std::variant<ThresholdPolicy, TopNPolicy>;

struct FilterResult {
  std::vector<Spectrum> kept;       // input order preserved
  std::vector<Spectrum> discarded;  // input order preserved
  std::vector<double> distances;    // one per input spectrum
  std::vector<bool> kept_flags;     // one per input spectrum
  std::vector<std::string> warnings;
};

FilterResult filter(std::span<const Spectrum> spectra, const ReferenceSet& refs,
                    const FilterPolicy& policy);

/// Selection on precomputed distances; returns keep flags.
std::vector<bool> select_threshold(std::span<const double> distances, double tau);
// Ties broken by the smaller scan index, then by input position.
std::vector<bool> select_top_n(std::span<const double> distances,
                               std::span<const std::int64_t> scan_index, std::size_t n);

}  // namespace cocoa
