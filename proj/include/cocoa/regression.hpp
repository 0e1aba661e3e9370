#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "cocoa/model_spec.hpp"
#include "cocoa/resampling.hpp"
#include "cocoa/types.hpp"

namespace cocoa {

namespace detail {
class FittedModel;
}

/// Immutable fitted predictor for one (property, range) pair.
class TrainedModel {
 public:
  TrainedModel(ModelSpec spec, Property property, RangeTag range, std::size_t width,
               std::shared_ptr<const detail::FittedModel> impl,
               std::vector<std::string> warnings = {});

  const ModelSpec& spec() const { return spec_; }
  Property property() const { return property_; }
  RangeTag range() const { return range_; }
  std::size_t width() const { return width_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  bool converged() const { return warnings_.empty(); }

  /// Normalized predictions, one per row of x.
  Vector predict(const Matrix& x) const;

  const detail::FittedModel& impl() const { return *impl_; }

 private:
  ModelSpec spec_;
  Property property_;
  RangeTag range_;
  std::size_t width_;
  std::shared_ptr<const detail::FittedModel> impl_;
  std::vector<std::string> warnings_;
};

TrainedModel fit(const ModelSpec& spec, const Matrix& x, const Vector& y,
                 Property property = Property::Fermentation, RangeTag range = RangeTag::Vis);

// Versioned binary container: spec echo, target scaler and fitted parameters.
std::string encode_model(const TrainedModel& model, const TargetScaler& scaler);

struct LoadedModel {
  TrainedModel model;
  TargetScaler scaler;
};

LoadedModel decode_model(std::string_view bytes);
void save_model(const std::filesystem::path& path, const TrainedModel& model,
                const TargetScaler& scaler);
LoadedModel load_model(const std::filesystem::path& path);

struct GridAxis {
  std::string name;
  std::vector<double> values;
};

struct GridSearchConfig {
  std::vector<GridAxis> grid;  // enumerated with the last axis varying fastest
  std::size_t folds = 5;
};

struct CvRow {
  std::vector<std::pair<std::string, double>> params;
  std::vector<double> fold_mse;
  double mean_mse = 0.0;
};

struct GridSearchResult {
  ModelSpec best;
  std::size_t best_index = 0;
  std::vector<CvRow> table;
};

/// Every grid point in enumeration order.
std::vector<std::vector<std::pair<std::string, double>>> enumerate_grid(const GridSearchConfig& cfg);

/// Row -> fold assignment used by grid_search_cv.
std::vector<std::size_t> fold_assignment(std::size_t rows, std::size_t folds, std::uint64_t seed);

/// Seeded k-fold CV over the grid; the lowest mean validation MSE wins and
/// ties go to the earlier grid point. A single grid point is returned
/// without cross-validation.
GridSearchResult grid_search_cv(const ModelSpec& base, const GridSearchConfig& cfg,
                                const Matrix& x, const Vector& y, std::uint64_t seed,
                                unsigned threads = 1);

nlohmann::json to_json(const GridSearchConfig& cfg);
GridSearchConfig grid_config_from_json(const nlohmann::json& j);

}  // namespace cocoa
