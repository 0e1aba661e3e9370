#pragma once

#include <string>
#include <vector>

#include "cocoa/evaluation.hpp"
#include "cocoa/types.hpp"

namespace cocoa {

struct ScatterSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

std::string svg_scatter(const std::vector<ScatterSeries>& series, const std::string& title,
                        const std::string& x_label, const std::string& y_label);

/// Grouped bars of predictions against the lab value, one panel per property.
std::string svg_region_bars(const RegionReport& report, const std::string& batch_id);

}  // namespace cocoa
