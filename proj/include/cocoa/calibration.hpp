#pragma once

#include <cstdint>
#include <vector>

#include "cocoa/types.hpp"

namespace cocoa {

inline constexpr double kReflectanceCeiling = 1.5;

/// Per-band flags; a set flag means the band is excluded downstream.
class BandMask {
 public:
  BandMask() = default;
  explicit BandMask(std::size_t bands) : flags_(bands, 0) {}

  std::size_t size() const { return flags_.size(); }
  bool empty() const { return flags_.empty(); }
  bool operator[](std::size_t i) const { return flags_[i] != 0; }
  void set(std::size_t i) { flags_[i] = 1; }
  std::size_t count() const;
  // Union with another mask of the same length (an empty mask is a no-op).
  void merge(const BandMask& other);

  friend bool operator==(const BandMask&, const BandMask&) = default;

 private:
  std::vector<std::uint8_t> flags_;
};

struct MaskedSpectrum {
  Spectrum spectrum;
  BandMask mask;
};

struct CalibrationPair {
  Spectrum white;
  Spectrum black;
};

struct CropWindow {
  double lo;
  double hi;
};

/// Flags bands whose raw value reaches `ceiling`.
MaskedSpectrum mask_saturated(const Spectrum& spec, double ceiling);

/// (raw - black) / (white - black) per band, clipped to [0, 1.5]. Bands where
/// white <= black, or flagged in `extra`, are masked and hold 0.
MaskedSpectrum compute_reflectance(const Spectrum& raw, const CalibrationPair& cal,
                                   const BandMask& extra = {});

/// Index range [first, last) of bands with lo <= wavelength <= hi.
std::pair<std::size_t, std::size_t> crop_bounds(const WavelengthGrid& grid, CropWindow window);
GridPtr crop_grid(const GridPtr& grid, CropWindow window);
Spectrum crop(const Spectrum& spec, CropWindow window);
BandMask crop(const BandMask& mask, const WavelengthGrid& grid, CropWindow window);

/// Drops flagged bands from a spectrum (and its grid).
Spectrum drop_bands(const Spectrum& spec, const BandMask& mask);
GridPtr drop_bands(const GridPtr& grid, const BandMask& mask);

}  // namespace cocoa
