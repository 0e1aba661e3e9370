#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cocoa/regression.hpp"
#include "cocoa/resampling.hpp"
#include "cocoa/types.hpp"

namespace cocoa {

/// 1 - SS_res / SS_tot. Throws UndefinedVariance for constant y_true.
double r_squared(const Vector& y_true, const Vector& y_pred);
double mse(const Vector& y_true, const Vector& y_pred);

enum class ModelGroup { DeepLearning, MachineLearning };
std::string_view to_string(ModelGroup g);

/// Table label for a spec: KNNR, RFR, SVR, MLP or CNN.
std::string model_label(const ModelSpec& spec);
ModelGroup model_group(const ModelSpec& spec);

struct ReferenceCell {
  double r2;
  double mse;
};

/// Published R2 / MSE for a (model label, range, property) cell, if any.
std::optional<ReferenceCell> published_cell(std::string_view model, RangeTag range, Property p);

/// Published models this implementation does not train.
inline constexpr std::array<std::string_view, 3> kGapModels = {"S-Net", "LSTM", "Transformer"};

// Evaluation subsets of the test rows.
inline constexpr std::string_view kSubsetRealizations = "realizations";  // rows of training batches
inline constexpr std::string_view kSubsetBatches = "batches";            // rows of held-out batches
inline constexpr std::string_view kSubsetAll = "all";
inline constexpr std::string_view kSubsetTrain = "train";                // leakage diagnostic

struct EvalRow {
  std::string model;
  ModelGroup group = ModelGroup::MachineLearning;
  RangeTag range = RangeTag::Vis;
  Property property = Property::Fermentation;
  std::string subset;
  std::size_t n_test = 0;
  double r2 = 0.0;
  double mse = 0.0;           // normalized targets
  double mse_original = 0.0;  // property units
  bool best_r2 = false;
  bool second_r2 = false;
  bool best_mse = false;
  bool second_mse = false;
  bool gap = false;           // published model not trained here
  bool leakage = false;       // train-set row with a perfect fit
  std::optional<ReferenceCell> reference;
};

struct EvalReport {
  std::vector<EvalRow> rows;
};

struct EvalOptions {
  bool include_train_rows = false;
  bool include_gaps = true;
};

/// Metrics for every model on the test rows of `split` (targets already
/// normalized by `scaler`). Models whose range differs from the split are
/// skipped.
EvalReport evaluate_suite(std::span<const TrainedModel> models, const DatasetSplit& split,
                          const TargetScaler& scaler, const EvalOptions& options = {});

/// Appends gap rows for published models absent from `report`.
void add_gap_rows(EvalReport& report, std::span<const RangeTag> ranges);

/// Best and second-best per (group, subset, property) for R2 and MSE.
void mark_rankings(EvalReport& report);

std::string report_csv(const EvalReport& report);
std::string report_text(const EvalReport& report, std::string_view subset);

// --- cross-region generalization ------------------------------------------

struct RegionPrediction {
  std::string model;
  RangeTag range = RangeTag::Vis;
  double value = 0.0;     // batch mean of de-normalized realization predictions
  double variance = 0.0;  // across realizations
  std::size_t realizations = 0;
  double abs_error = 0.0;
  std::size_t rank = 0;   // 1 = closest
};

struct RegionCell {
  std::string batch_id;
  std::string region;
  Property property = Property::Fermentation;
  double lab = 0.0;
  std::vector<RegionPrediction> predictions;  // in rank order
};

struct RegionReport {
  std::vector<RegionCell> cells;
};

/// Bootstrapped realizations of one region batch, per range.
using RegionBatches = std::map<std::string, std::map<RangeTag, Matrix>>;

/// Ranks de-normalized batch-level predictions by distance to the lab value;
/// ties go to the lower-variance prediction.
RegionReport region_generalization(std::span<const LoadedModel> models,
                                   const RegionBatches& batches,
                                   std::span<const BatchRecord> labels);

std::string region_csv(const RegionReport& report);
std::string region_text(const RegionReport& report);

}  // namespace cocoa
