#include "cocoa/calibration.hpp"

#include <algorithm>
#include <numeric>

namespace cocoa {

std::size_t BandMask::count() const {
  return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), std::uint8_t{1}));
}

void BandMask::merge(const BandMask& other) {
  if (other.empty()) return;
  if (flags_.empty()) {
    flags_ = other.flags_;
    return;
  }
  if (other.size() != size()) fail(ErrorKind::Dimension, "band masks differ in length");
  for (std::size_t i = 0; i < flags_.size(); ++i) flags_[i] |= other.flags_[i];
}

MaskedSpectrum mask_saturated(const Spectrum& spec, double ceiling) {
  if (!(ceiling > 0.0)) fail(ErrorKind::Domain, "saturation ceiling must be positive");
  MaskedSpectrum out{spec, BandMask(spec.size())};
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (spec.values[i] >= ceiling) out.mask.set(i);
  }
  return out;
}

MaskedSpectrum compute_reflectance(const Spectrum& raw, const CalibrationPair& cal,
                                   const BandMask& extra) {
  if (!same_grid(raw.grid, cal.white.grid) || !same_grid(raw.grid, cal.black.grid) ||
      raw.size() != cal.white.size() || raw.size() != cal.black.size()) {
    fail(ErrorKind::Dimension, "raw scan and calibration references are on different grids");
  }
  if (!extra.empty() && extra.size() != raw.size()) {
    fail(ErrorKind::Dimension, "band mask length does not match the scan");
  }
  if (raw.kind != SpectrumKind::Intensity) {
    fail(ErrorKind::Domain, "reflectance needs an intensity scan");
  }
  MaskedSpectrum out{raw, BandMask(raw.size())};
  out.spectrum.kind = SpectrumKind::Reflectance;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double span = cal.white.values[i] - cal.black.values[i];
    if (!(span > 0.0) || (!extra.empty() && extra[i])) {
      out.mask.set(i);
      out.spectrum.values[i] = 0.0;
      continue;
    }
    const double r = (raw.values[i] - cal.black.values[i]) / span;
    out.spectrum.values[i] = std::clamp(r, 0.0, kReflectanceCeiling);
  }
  if (out.mask.count() == raw.size()) {
    fail(ErrorKind::DegenerateCalibration, "every band is masked; calibration is degenerate");
  }
  return out;
}

std::pair<std::size_t, std::size_t> crop_bounds(const WavelengthGrid& grid, CropWindow window) {
  if (!(window.lo < window.hi)) fail(ErrorKind::Domain, "crop window needs lo < hi");
  const auto v = grid.values();
  const auto first = std::lower_bound(v.begin(), v.end(), window.lo);
  const auto last = std::upper_bound(v.begin(), v.end(), window.hi);
  if (first >= last) {
    fail(ErrorKind::EmptyWindow, "crop window does not intersect the wavelength grid");
  }
  return {static_cast<std::size_t>(first - v.begin()), static_cast<std::size_t>(last - v.begin())};
}

GridPtr crop_grid(const GridPtr& grid, CropWindow window) {
  const auto [first, last] = crop_bounds(*grid, window);
  if (first == 0 && last == grid->size()) return grid;
  const auto v = grid->values();
  return make_grid(std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(first),
                                       v.begin() + static_cast<std::ptrdiff_t>(last)),
                   grid->range());
}

Spectrum crop(const Spectrum& spec, CropWindow window) {
  const auto [first, last] = crop_bounds(*spec.grid, window);
  Spectrum out;
  out.grid = crop_grid(spec.grid, window);
  out.values.assign(spec.values.begin() + static_cast<std::ptrdiff_t>(first),
                    spec.values.begin() + static_cast<std::ptrdiff_t>(last));
  out.kind = spec.kind;
  out.meta = spec.meta;
  return out;
}

BandMask crop(const BandMask& mask, const WavelengthGrid& grid, CropWindow window) {
  const auto [first, last] = crop_bounds(grid, window);
  BandMask out(last - first);
  if (mask.empty()) return out;
  for (std::size_t i = first; i < last; ++i) {
    if (mask[i]) out.set(i - first);
  }
  return out;
}

Spectrum drop_bands(const Spectrum& spec, const BandMask& mask) {
  if (mask.empty() || mask.count() == 0) return spec;
  Spectrum out;
  out.grid = drop_bands(spec.grid, mask);
  out.kind = spec.kind;
  out.meta = spec.meta;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (!mask[i]) out.values.push_back(spec.values[i]);
  }
  return out;
}

GridPtr drop_bands(const GridPtr& grid, const BandMask& mask) {
  if (mask.empty() || mask.count() == 0) return grid;
  if (mask.size() != grid->size()) fail(ErrorKind::Dimension, "mask length does not match grid");
  std::vector<double> nm;
  for (std::size_t i = 0; i < grid->size(); ++i) {
    if (!mask[i]) nm.push_back((*grid)[i]);
  }
  if (nm.empty()) fail(ErrorKind::DegenerateCalibration, "every band is masked");
  return make_grid(std::move(nm), grid->range());
}

}  // namespace cocoa
