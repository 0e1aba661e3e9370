#include "cocoa/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cocoa/text.hpp"

namespace cocoa {

double r_squared(const Vector& y_true, const Vector& y_pred) {
  if (y_true.size() != y_pred.size()) fail(ErrorKind::Dimension, "r_squared needs equal lengths");
  if (y_true.size() < 2) fail(ErrorKind::UndefinedVariance, "r_squared needs at least two values");
  const double mean = y_true.mean();
  const double ss_tot = (y_true.array() - mean).square().sum();
  if (ss_tot == 0.0) fail(ErrorKind::UndefinedVariance, "r_squared of a constant target");
  return 1.0 - (y_true - y_pred).squaredNorm() / ss_tot;
}

double mse(const Vector& y_true, const Vector& y_pred) {
  if (y_true.size() != y_pred.size()) fail(ErrorKind::Dimension, "mse needs equal lengths");
  if (y_true.size() < 1) fail(ErrorKind::Dimension, "mse needs at least one value");
  return (y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size());
}

std::string_view to_string(ModelGroup g) {
  return g == ModelGroup::DeepLearning ? "DL" : "ML";
}

std::string model_label(const ModelSpec& spec) {
  const std::string_view f = family_name(spec);
  if (f == "knn") return "KNNR";
  if (f == "forest") return "RFR";
  if (f == "svr") return "SVR";
  if (f == "cnn") return "CNN";
  return "MLP";
}

ModelGroup model_group(const ModelSpec& spec) {
  return std::holds_alternative<NetworkSpec>(spec) ? ModelGroup::DeepLearning
                                                   : ModelGroup::MachineLearning;
}

namespace {

struct PublishedRow {
  std::string_view model;
  RangeTag range;
  // Cadmium, moisture, fermentation, polyphenols
  std::array<double, 4> r2;
  std::array<double, 4> mse;
};

constexpr PublishedRow kPublished[] = {
    {"S-Net", RangeTag::Vis, {.9605, .9665, .8457, .8684}, {.045, .032, .054, .043}},
    {"S-Net", RangeTag::Nir, {.9449, .9522, .8718, .8619}, {.050, .034, .052, .041}},
    {"CNN", RangeTag::Vis, {.8308, .4032, .8128, .5289}, {.134, .128, .097, .115}},
    {"CNN", RangeTag::Nir, {.8232, .7697, .7863, .7180}, {.140, .100, .095, .098}},
    {"LSTM", RangeTag::Vis, {.9070, .9555, .8718, .8205}, {.088, .038, .050, .045}},
    {"LSTM", RangeTag::Nir, {.8696, .9681, .8429, .8457}, {.098, .036, .055, .047}},
    {"Transformer", RangeTag::Vis, {.9558, .9824, .7965, .8900}, {.048, .025, .062, .039}},
    {"Transformer", RangeTag::Nir, {.9590, .9926, .7671, .9006}, {.046, .022, .065, .037}},
    {"SVR", RangeTag::Vis, {.6321, .3034, .6168, .3214}, {.250, .270, .190, .230}},
    {"SVR", RangeTag::Nir, {.6729, .3167, .6058, .3407}, {.240, .265, .185, .225}},
    {"RFR", RangeTag::Vis, {.6020, .8592, .6670, .7992}, {.270, .070, .140, .120}},
    {"RFR", RangeTag::Nir, {.6175, .8701, .6707, .8005}, {.265, .068, .138, .118}},
    {"KNNR", RangeTag::Vis, {.8901, .9365, .7232, .7689}, {.090, .050, .110, .098}},
    {"KNNR", RangeTag::Nir, {.9081, .9740, .7372, .8002}, {.085, .045, .108, .095}},
};

std::size_t published_column(Property p) {
  switch (p) {
    case Property::Cadmium: return 0;
    case Property::Moisture: return 1;
    case Property::Fermentation: return 2;
    case Property::Polyphenols: return 3;
  }
  return 0;
}

constexpr std::array<Property, 4> kTableOrder = {Property::Cadmium, Property::Moisture,
                                                 Property::Fermentation, Property::Polyphenols};

std::string num(double v) { return std::isfinite(v) ? text::format_double(v) : "nan"; }

}  // namespace

std::optional<ReferenceCell> published_cell(std::string_view model, RangeTag range, Property p) {
  for (const auto& row : kPublished) {
    if (row.model == model && row.range == range) {
      const std::size_t c = published_column(p);
      return ReferenceCell{row.r2[c], row.mse[c]};
    }
  }
  return std::nullopt;
}

EvalReport evaluate_suite(std::span<const TrainedModel> models, const DatasetSplit& split,
                          const TargetScaler& scaler, const EvalOptions& options) {
  EvalReport report;
  std::vector<std::size_t> realization_rows;
  std::vector<std::size_t> batch_rows;
  std::vector<std::size_t> all_rows(split.test_rows.size());
  std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
  for (std::size_t i = 0; i < split.test_rows.size(); ++i) {
    (split.test_rows[i].held_out_batch ? batch_rows : realization_rows).push_back(i);
  }

  for (const auto& model : models) {
    if (model.range() != split.range) continue;
    const Property p = model.property();
    const std::string label = model_label(model.spec());
    auto emit = [&](std::string_view subset, const Matrix& x, const Vector& y,
                    const std::vector<std::size_t>& rows) {
      if (rows.empty()) return;
      Vector yt(static_cast<Eigen::Index>(rows.size()));
      Matrix xs(static_cast<Eigen::Index>(rows.size()), x.cols());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        yt[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(rows[i])];
        xs.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
      }
      const Vector yp = model.predict(xs);
      EvalRow row;
      row.model = label;
      row.group = model_group(model.spec());
      row.range = split.range;
      row.property = p;
      row.subset = std::string(subset);
      row.n_test = rows.size();
      try {
        row.r2 = r_squared(yt, yp);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::UndefinedVariance) throw;
        row.r2 = std::nan("");
      }
      row.mse = mse(yt, yp);
      Vector yt_orig = yt;
      Vector yp_orig = yp;
      for (Eigen::Index i = 0; i < yt.size(); ++i) {
        yt_orig[i] = scaler.inverse(p, yt[i]);
        yp_orig[i] = scaler.inverse(p, yp[i]);
      }
      row.mse_original = mse(yt_orig, yp_orig);
      if (subset != kSubsetTrain) row.reference = published_cell(label, split.range, p);
      row.leakage = subset == kSubsetTrain && std::abs(row.r2 - 1.0) <= 1e-12;
      report.rows.push_back(std::move(row));
    };
    const Vector test_y = split.test_targets(p);
    emit(kSubsetRealizations, split.test_x, test_y, realization_rows);
    emit(kSubsetBatches, split.test_x, test_y, batch_rows);
    emit(kSubsetAll, split.test_x, test_y, all_rows);
    if (options.include_train_rows) {
      std::vector<std::size_t> train(split.train_rows.size());
      std::iota(train.begin(), train.end(), std::size_t{0});
      emit(kSubsetTrain, split.train_x, split.train_targets(p), train);
    }
  }
  if (options.include_gaps) {
    const RangeTag r = split.range;
    add_gap_rows(report, std::span<const RangeTag>(&r, 1));
  }
  return report;
}

void add_gap_rows(EvalReport& report, std::span<const RangeTag> ranges) {
  for (RangeTag r : ranges) {
    for (std::string_view m : kGapModels) {
      for (Property p : kTableOrder) {
        EvalRow row;
        row.model = std::string(m);
        row.group = ModelGroup::DeepLearning;
        row.range = r;
        row.property = p;
        row.subset = std::string(kSubsetAll);
        row.r2 = std::nan("");
        row.mse = std::nan("");
        row.mse_original = std::nan("");
        row.gap = true;
        row.reference = published_cell(m, r, p);
        report.rows.push_back(std::move(row));
      }
    }
  }
}

void mark_rankings(EvalReport& report) {
  std::map<std::tuple<ModelGroup, std::string, Property>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    auto& row = report.rows[i];
    row.best_r2 = row.second_r2 = row.best_mse = row.second_mse = false;
    if (row.gap || row.subset == kSubsetTrain) continue;
    groups[{row.group, row.subset, row.property}].push_back(i);
  }
  for (auto& [key, idx] : groups) {
    auto rank = [&](auto better, bool EvalRow::*first, bool EvalRow::*second) {
      std::vector<std::size_t> order;
      for (std::size_t i : idx) {
        if (!std::isnan(better(report.rows[i]))) order.push_back(i);
      }
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return better(report.rows[a]) > better(report.rows[b]);
      });
      if (!order.empty()) report.rows[order[0]].*first = true;
      if (order.size() > 1) report.rows[order[1]].*second = true;
    };
    rank([](const EvalRow& r) { return r.r2; }, &EvalRow::best_r2, &EvalRow::second_r2);
    rank([](const EvalRow& r) { return -r.mse; }, &EvalRow::best_mse, &EvalRow::second_mse);
  }
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "model,group,range,property,subset,n_test,r2,mse,mse_original,best_r2,second_r2,"
         "best_mse,second_mse,gap,leakage,reference_r2,reference_mse\n";
  for (const auto& r : report.rows) {
    out << r.model << ',' << to_string(r.group) << ',' << to_string(r.range) << ','
        << to_string(r.property) << ',' << r.subset << ',' << r.n_test << ',' << num(r.r2) << ','
        << num(r.mse) << ',' << num(r.mse_original) << ',' << r.best_r2 << ',' << r.second_r2
        << ',' << r.best_mse << ',' << r.second_mse << ',' << r.gap << ',' << r.leakage << ','
        << (r.reference ? num(r.reference->r2) : "") << ','
        << (r.reference ? num(r.reference->mse) : "") << '\n';
  }
  return out.str();
}

namespace {

std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

std::string cell(double v, bool best, bool second, int digits) {
  if (std::isnan(v)) return "-";
  return text::format_fixed(v, digits) + (best ? "*" : second ? "+" : "");
}

}  // namespace

std::string report_text(const EvalReport& report, std::string_view subset) {
  std::ostringstream out;
  out << "R2 and MSE on normalized targets (subset: " << subset
      << "). * best, + second best within group.\n";
  out << pad("group", 6) << pad("model", 20) << pad("range", 6);
  for (Property p : kTableOrder) out << pad("R2 " + std::string(to_string(p)).substr(0, 5), 12);
  for (Property p : kTableOrder) out << pad("MSE " + std::string(to_string(p)).substr(0, 5), 12);
  out << '\n';
  for (ModelGroup g : {ModelGroup::DeepLearning, ModelGroup::MachineLearning}) {
    std::vector<std::pair<std::string, RangeTag>> keys;
    for (const auto& r : report.rows) {
      if (r.group != g || (r.subset != subset && !r.gap)) continue;
      std::pair<std::string, RangeTag> k{r.model, r.range};
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
    for (const auto& [model, range] : keys) {
      const bool gap = std::any_of(report.rows.begin(), report.rows.end(), [&](const EvalRow& r) {
        return r.model == model && r.range == range && r.gap;
      });
      out << pad(std::string(to_string(g)), 6) << pad(model + (gap ? " (ref)" : ""), 20)
          << pad(std::string(to_string(range)), 6);
      auto find = [&](Property p) -> const EvalRow* {
        for (const auto& r : report.rows) {
          if (r.model == model && r.range == range && r.property == p &&
              (r.subset == subset || r.gap)) {
            return &r;
          }
        }
        return nullptr;
      };
      for (Property p : kTableOrder) {
        const EvalRow* r = find(p);
        std::string c = "-";
        if (r && r->gap && r->reference) c = "[" + text::format_fixed(r->reference->r2, 4) + "]";
        else if (r) c = cell(r->r2, r->best_r2, r->second_r2, 4);
        out << pad(c, 12);
      }
      for (Property p : kTableOrder) {
        const EvalRow* r = find(p);
        std::string c = "-";
        if (r && r->gap && r->reference) c = "[" + text::format_fixed(r->reference->mse, 3) + "]";
        else if (r) c = cell(r->mse, r->best_mse, r->second_mse, 4);
        out << pad(c, 12);
      }
      out << '\n';
    }
  }
  out << "[x] published value for a model not trained here.\n";
  return out.str();
}

RegionReport region_generalization(std::span<const LoadedModel> models,
                                   const RegionBatches& batches,
                                   std::span<const BatchRecord> labels) {
  RegionReport report;
  for (const auto& [batch_id, per_range] : batches) {
    const auto label = std::find_if(labels.begin(), labels.end(),
                                    [&](const BatchRecord& b) { return b.batch_id == batch_id; });
    if (label == labels.end()) {
      fail(ErrorKind::Integrity, "region batch '" + batch_id + "' has no label record");
    }
    const bool covered = std::any_of(per_range.begin(), per_range.end(),
                                     [](const auto& kv) { return kv.second.rows() > 0; });
    if (!covered) {
      fail(ErrorKind::Coverage, "region batch '" + batch_id + "' has no surviving spectra");
    }
    for (Property p : kTableOrder) {
      RegionCell c;
      c.batch_id = batch_id;
      c.region = label->region;
      c.property = p;
      c.lab = label->target(p);
      for (const auto& lm : models) {
        if (lm.model.property() != p) continue;
        const auto it = per_range.find(lm.model.range());
        if (it == per_range.end() || it->second.rows() == 0) continue;
        const Vector norm = lm.model.predict(it->second);
        Vector v(norm.size());
        for (Eigen::Index i = 0; i < norm.size(); ++i) v[i] = lm.scaler.inverse(p, norm[i]);
        RegionPrediction pr;
        pr.model = model_label(lm.model.spec());
        pr.range = lm.model.range();
        pr.value = v.mean();
        pr.realizations = static_cast<std::size_t>(v.size());
        pr.variance = v.size() > 1 ? (v.array() - pr.value).square().sum() /
                                         static_cast<double>(v.size() - 1)
                                   : 0.0;
        pr.abs_error = std::abs(pr.value - c.lab);
        c.predictions.push_back(std::move(pr));
      }
      std::stable_sort(c.predictions.begin(), c.predictions.end(),
                       [](const RegionPrediction& a, const RegionPrediction& b) {
                         if (a.abs_error != b.abs_error) return a.abs_error < b.abs_error;
                         return a.variance < b.variance;
                       });
      for (std::size_t i = 0; i < c.predictions.size(); ++i) c.predictions[i].rank = i + 1;
      report.cells.push_back(std::move(c));
    }
  }
  return report;
}

std::string region_csv(const RegionReport& report) {
  std::ostringstream out;
  out << "batch_id,region,property,lab,model,range,prediction,variance,realizations,abs_error,"
         "rank\n";
  for (const auto& c : report.cells) {
    for (const auto& p : c.predictions) {
      out << c.batch_id << ',' << c.region << ',' << to_string(c.property) << ',' << num(c.lab)
          << ',' << p.model << ',' << to_string(p.range) << ',' << num(p.value) << ','
          << num(p.variance) << ',' << p.realizations << ',' << num(p.abs_error) << ',' << p.rank
          << '\n';
    }
  }
  return out.str();
}

std::string region_text(const RegionReport& report) {
  std::ostringstream out;
  out << "Region generalization. * closest to lab value, + second closest.\n";
  std::string current;
  for (const auto& c : report.cells) {
    if (c.batch_id != current) {
      current = c.batch_id;
      out << '\n' << c.region << " (" << c.batch_id << ")\n";
    }
    out << "  " << pad(std::string(to_string(c.property)), 14) << "lab "
        << pad(text::format_fixed(c.lab, 3), 9);
    for (const auto& p : c.predictions) {
      out << ' ' << p.model << '/' << to_string(p.range) << ' ' << text::format_fixed(p.value, 3)
          << (p.rank == 1 ? "*" : p.rank == 2 ? "+" : "");
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace cocoa
