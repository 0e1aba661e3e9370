#include "cocoa/types.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace cocoa {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Integrity: return "integrity";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::DegenerateCalibration: return "degenerate-calibration";
    case ErrorKind::DegenerateSpectrum: return "degenerate-spectrum";
    case ErrorKind::EmptyWindow: return "empty-window";
    case ErrorKind::Config: return "config";
    case ErrorKind::Rank: return "rank";
    case ErrorKind::ZeroVariance: return "zero-variance";
    case ErrorKind::ConstantTarget: return "constant-target";
    case ErrorKind::UndefinedVariance: return "undefined-variance";
    case ErrorKind::Data: return "data";
    case ErrorKind::Fold: return "fold";
    case ErrorKind::Coverage: return "coverage";
    case ErrorKind::Divergence: return "divergence";
  }
  return "unknown";
}

std::string_view to_string(RangeTag tag) {
  return tag == RangeTag::Vis ? "vis" : "nir";
}

RangeTag parse_range(std::string_view text) {
  if (text == "vis" || text == "VIS") return RangeTag::Vis;
  if (text == "nir" || text == "NIR") return RangeTag::Nir;
  fail(ErrorKind::Parse, "unknown spectral range '" + std::string(text) + "'");
}

std::string_view to_string(Property p) {
  switch (p) {
    case Property::Fermentation: return "fermentation";
    case Property::Moisture: return "moisture";
    case Property::Cadmium: return "cadmium";
    case Property::Polyphenols: return "polyphenols";
  }
  return "unknown";
}

std::string_view unit_of(Property p) {
  switch (p) {
    case Property::Fermentation: return "%";
    case Property::Moisture: return "%";
    case Property::Cadmium: return "mg/kg";
    case Property::Polyphenols: return "mg/g";
  }
  return "";
}

Property parse_property(std::string_view text) {
  for (Property p : kAllProperties) {
    if (to_string(p) == text) return p;
  }
  fail(ErrorKind::Parse, "unknown property '" + std::string(text) + "'");
}

WavelengthGrid::WavelengthGrid(std::vector<double> nm, RangeTag tag)
    : nm_(std::move(nm)), tag_(tag) {
  if (nm_.empty()) fail(ErrorKind::Validation, "wavelength grid is empty");
  for (std::size_t i = 0; i < nm_.size(); ++i) {
    if (!(nm_[i] > 0.0) || !std::isfinite(nm_[i])) {
      fail(ErrorKind::Validation,
           "wavelength grid value at position " + std::to_string(i) + " is not positive");
    }
    if (i > 0 && !(nm_[i] > nm_[i - 1])) {
      fail(ErrorKind::Validation,
           "wavelength grid is not strictly increasing at position " + std::to_string(i));
    }
  }
}

GridPtr make_grid(std::vector<double> nm, RangeTag tag) {
  return std::make_shared<const WavelengthGrid>(std::move(nm), tag);
}

bool same_grid(const GridPtr& a, const GridPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return *a == *b;
}

bool operator==(const Spectrum& a, const Spectrum& b) {
  return same_grid(a.grid, b.grid) && a.values == b.values && a.kind == b.kind &&
         a.meta == b.meta;
}

Matrix to_matrix(std::span<const Spectrum> spectra) {
  if (spectra.empty()) return Matrix(0, 0);
  const auto bands = static_cast<Eigen::Index>(spectra.front().size());
  Matrix m(static_cast<Eigen::Index>(spectra.size()), bands);
  for (std::size_t r = 0; r < spectra.size(); ++r) {
    if (static_cast<Eigen::Index>(spectra[r].size()) != bands) {
      fail(ErrorKind::Dimension, "spectra have differing band counts");
    }
    for (Eigen::Index c = 0; c < bands; ++c) {
      m(static_cast<Eigen::Index>(r), c) = spectra[r].values[static_cast<std::size_t>(c)];
    }
  }
  return m;
}

double BatchRecord::target(Property p) const {
  switch (p) {
    case Property::Fermentation: return fermentation_level;
    case Property::Moisture: return moisture;
    case Property::Cadmium: return cadmium;
    case Property::Polyphenols: return polyphenols;
  }
  return 0.0;
}

std::array<double, 4> BatchRecord::targets() const {
  return {fermentation_level, moisture, cadmium, polyphenols};
}

void validate(const BatchRecord& r) {
  auto bad = [&](const std::string& what) {
    fail(ErrorKind::Validation, "batch " + r.batch_id + ": " + what);
  };
  if (r.batch_id.empty()) bad("empty batch id");
  if (!(r.fermentation_level >= 0.0 && r.fermentation_level <= 1.0)) {
    bad("fermentation level outside [0, 100]%");
  }
  if (!(r.moisture > 0.0 && r.moisture < 100.0)) bad("moisture outside (0, 100)%");
  if (!(r.cadmium >= 0.0) || !std::isfinite(r.cadmium)) bad("negative cadmium");
  if (!(r.polyphenols >= 0.0) || !std::isfinite(r.polyphenols)) bad("negative polyphenols");
  if (r.fermentation_hours && !(*r.fermentation_hours >= 0.0)) bad("negative fermentation time");
  if (!r.date.ok()) bad("invalid date");
}

std::string format_date(std::chrono::year_month_day date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02u/%02u/%04d", static_cast<unsigned>(date.day()),
                static_cast<unsigned>(date.month()), static_cast<int>(date.year()));
  return buf;
}

// dd/mm/yyyy
std::chrono::year_month_day parse_date(std::string_view text) {
  int parts[3] = {0, 0, 0};
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t end = i < 2 ? text.find('/', pos) : text.size();
    if (end == std::string_view::npos) break;
    const char* first = text.data() + pos;
    const char* last = text.data() + end;
    auto [ptr, ec] = std::from_chars(first, last, parts[i]);
    if (ec != std::errc{} || ptr != last) {
      fail(ErrorKind::Parse, "malformed date '" + std::string(text) + "'");
    }
    pos = end + 1;
  }
  std::chrono::year_month_day ymd{std::chrono::year{parts[2]},
                                  std::chrono::month{static_cast<unsigned>(parts[1])},
                                  std::chrono::day{static_cast<unsigned>(parts[0])}};
  if (!ymd.ok()) fail(ErrorKind::Parse, "malformed date '" + std::string(text) + "'");
  return ymd;
}

}  // namespace cocoa
