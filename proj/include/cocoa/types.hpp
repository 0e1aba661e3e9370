#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "cocoa/error.hpp"

namespace cocoa {

// Feature matrices are stored one observation per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class RangeTag { Vis, Nir };

std::string_view to_string(RangeTag tag);
RangeTag parse_range(std::string_view text);

enum class SpectrumKind { Intensity, Reflectance };

enum class Property { Fermentation = 0, Moisture = 1, Cadmium = 2, Polyphenols = 3 };

inline constexpr std::array<Property, 4> kAllProperties = {
    Property::Fermentation, Property::Moisture, Property::Cadmium, Property::Polyphenols};

std::string_view to_string(Property p);
std::string_view unit_of(Property p);
Property parse_property(std::string_view text);

/// Strictly increasing wavelength axis in nanometres.
class WavelengthGrid {
 public:
  WavelengthGrid(std::vector<double> nm, RangeTag tag);

  std::span<const double> values() const { return nm_; }
  std::size_t size() const { return nm_.size(); }
  double operator[](std::size_t i) const { return nm_[i]; }
  double front() const { return nm_.front(); }
  double back() const { return nm_.back(); }
  RangeTag range() const { return tag_; }

  friend bool operator==(const WavelengthGrid&, const WavelengthGrid&) = default;

 private:
  std::vector<double> nm_;
  RangeTag tag_;
};

using GridPtr = std::shared_ptr<const WavelengthGrid>;

GridPtr make_grid(std::vector<double> nm, RangeTag tag);

// Value equality, with a pointer fast path.
bool same_grid(const GridPtr& a, const GridPtr& b);

struct ScanMeta {
  std::string batch_id;
  std::int64_t scan_index = 0;
  std::optional<std::string> timestamp;

  friend bool operator==(const ScanMeta&, const ScanMeta&) = default;
};

struct Spectrum {
  GridPtr grid;
  std::vector<double> values;
  SpectrumKind kind = SpectrumKind::Intensity;
  ScanMeta meta;

  std::size_t size() const { return values.size(); }
};

// Compares grids by value, not by pointer.
bool operator==(const Spectrum& a, const Spectrum& b);

/// Copies the values of equally-sized spectra into a row-per-spectrum matrix.
Matrix to_matrix(std::span<const Spectrum> spectra);

struct BatchRecord {
  std::string batch_id;
  std::chrono::year_month_day date{};
  std::string region;
  std::string country;
  double fermentation_level = 0.0;  // fraction in [0, 1]
  double moisture = 0.0;            // percent
  double cadmium = 0.0;             // mg/kg
  bool cadmium_below_detection = false;
  double polyphenols = 0.0;         // mg/g
  std::optional<double> fermentation_hours;

  double target(Property p) const;
  std::array<double, 4> targets() const;

  friend bool operator==(const BatchRecord&, const BatchRecord&) = default;
};

// Throws Validation on out-of-range label values.
void validate(const BatchRecord& record);

std::string format_date(std::chrono::year_month_day date);
std::chrono::year_month_day parse_date(std::string_view text);

}  // namespace cocoa
