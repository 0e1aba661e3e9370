#include "cocoa/evaluation.hpp"
#include "cocoa/synth.hpp"
#include "common.hpp"

using namespace cocoa;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Matrix column(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

FeatureRow row_for(const std::string& batch, std::array<double, 4> t, bool held_out) {
  FeatureRow r;
  r.batch_id = batch;
  r.targets = t;
  r.held_out_batch = held_out;
  return r;
}

}  // namespace

TEST_CASE("r_squared examples") {
  const Vector y = vec({1, 2, 3});
  CHECK(r_squared(y, y) == 1.0);
  CHECK(r_squared(y, Vector::Constant(3, 2.0)) == 0.0);
  CHECK(r_squared(y, vec({1.1, 1.9, 3.2})) == doctest::Approx(0.97).epsilon(1e-12));
  CHECK(r_squared(y, vec({3, 2, 1})) < 0.0);
  CHECK_KIND(r_squared(Vector::Constant(4, 1.0), vec({1, 2, 3, 4})), ErrorKind::UndefinedVariance);
  CHECK_KIND(r_squared(vec({1}), vec({1})), ErrorKind::UndefinedVariance);
  CHECK_KIND(r_squared(y, vec({1, 2})), ErrorKind::Dimension);
}

TEST_CASE("r_squared is invariant to a common affine map") {
  std::mt19937_64 gen(61);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Vector a(20), b(20);
    for (Eigen::Index i = 0; i < 20; ++i) {
      a[i] = nd(gen);
      b[i] = a[i] + 0.3 * nd(gen);
    }
    const double scale = std::exp(nd(gen)), shift = 10 * nd(gen);
    const Vector a2 = (scale * a.array() + shift).matrix();
    const Vector b2 = (scale * b.array() + shift).matrix();
    CHECK(std::abs(r_squared(a, b) - r_squared(a2, b2)) <= 1e-12);
  }
}

TEST_CASE("mse examples") {
  const Vector y = vec({0.5, 1, 4});
  CHECK(mse(y, y) == 0.0);
  CHECK(mse(y, (y.array() + 0.25).matrix()) == doctest::Approx(0.0625));
  CHECK(mse(vec({0, 0}), vec({1, 3})) == 5.0);
  CHECK(mse(y, vec({0.5, 1, 4.5})) > 0.0);
}

TEST_CASE("published cells and labels") {
  const auto knn = published_cell("KNNR", RangeTag::Nir, Property::Cadmium);
  REQUIRE(knn.has_value());
  CHECK(knn->r2 == 0.9081);
  CHECK(knn->mse == 0.085);
  CHECK(published_cell("Transformer", RangeTag::Nir, Property::Moisture)->r2 == 0.9926);
  CHECK(published_cell("RFR", RangeTag::Nir, Property::Polyphenols)->r2 == 0.8005);
  CHECK_FALSE(published_cell("MLP", RangeTag::Nir, Property::Cadmium).has_value());
  CHECK(model_label(KnnSpec{}) == "KNNR");
  CHECK(model_label(ForestSpec{}) == "RFR");
  CHECK(model_label(default_cnn()) == "CNN");
  CHECK(model_group(default_mlp()) == ModelGroup::DeepLearning);
  CHECK(model_group(SvrSpec{}) == ModelGroup::MachineLearning);
}

TEST_CASE("evaluate_suite reports subsets, gaps, leakage and rankings") {
  DatasetSplit split;
  split.range = RangeTag::Nir;
  split.train_x = column({0, 1, 2, 3});
  split.train_rows = {row_for("1", {0, 0, 0, 0}, false), row_for("1", {1, 1, 1, 1}, false),
                      row_for("2", {0.2, 0.2, 0.2, 0.2}, false), row_for("2", {0.9, 0.9, 0.9, 0.9}, false)};
  split.test_x = column({0.1, 2.9, 1.2, 5});
  split.test_rows = {row_for("1", {0, 0, 0, 0}, false), row_for("2", {1, 1, 1, 1}, false),
                     row_for("17", {0.5, 0.5, 0.5, 0.5}, true), row_for("18", {0.8, 0.8, 0.8, 0.8}, true)};
  const TargetScaler scaler({0, 0, 0, 30}, {1, 10, 1, 50});
  std::vector<TrainedModel> models;
  for (Property p : kAllProperties) {
    models.push_back(fit(KnnSpec{1}, split.train_x, split.train_targets(p), p, RangeTag::Nir));
    models.push_back(fit(KnnSpec{4}, split.train_x, split.train_targets(p), p, RangeTag::Nir));
    models.push_back(fit(KnnSpec{1}, split.train_x, split.train_targets(p), p, RangeTag::Vis));
  }
  EvalReport report = evaluate_suite(models, split, scaler, {true, true});
  mark_rankings(report);

  std::size_t gaps = 0, trained = 0;
  for (const auto& r : report.rows) {
    CHECK(r.range == RangeTag::Nir);
    if (r.gap) {
      ++gaps;
      CHECK(r.reference.has_value());
      continue;
    }
    ++trained;
    CHECK(r.r2 <= 1.0);
    const double span = scaler.span(r.property);
    CHECK(std::abs(r.mse_original - r.mse * span * span) <= 1e-10 * std::max(1.0, r.mse_original));
    if (r.subset == kSubsetTrain) {
      CHECK(r.n_test == 4);
      CHECK(r.reference == std::nullopt);
    }
    if (r.subset == kSubsetRealizations) CHECK(r.n_test == 2);
    if (r.subset == kSubsetBatches) CHECK(r.n_test == 2);
    if (r.subset == kSubsetAll) CHECK(r.n_test == 4);
    if (r.subset == kSubsetTrain && r.n_test == 4 && std::abs(r.r2 - 1.0) <= 1e-12) CHECK(r.leakage);
  }
  CHECK(gaps == 3 * 4);
  CHECK(trained == 2 * 4 * 4);

  std::map<std::tuple<std::string, Property>, std::vector<const EvalRow*>> cells;
  for (const auto& r : report.rows)
    if (!r.gap && r.subset != kSubsetTrain) cells[{r.subset, r.property}].push_back(&r);
  for (const auto& [key, rows] : cells) {
    const auto best = std::max_element(rows.begin(), rows.end(), [](auto a, auto b) { return a->r2 < b->r2; });
    CHECK((*best)->best_r2);
    CHECK(std::count_if(rows.begin(), rows.end(), [](auto r) { return r->best_r2; }) == 1);
    CHECK(std::count_if(rows.begin(), rows.end(), [](auto r) { return r->second_r2; }) == 1);
    const auto low = std::min_element(rows.begin(), rows.end(), [](auto a, auto b) { return a->mse < b->mse; });
    CHECK((*low)->best_mse);
  }
  for (const auto& r : report.rows)
    if (r.gap || r.subset == kSubsetTrain) CHECK_FALSE((r.best_r2 || r.second_r2 || r.best_mse || r.second_mse));

  const std::string csv = report_csv(report);
  CHECK(csv.rfind("model,group,range,property,subset,n_test,r2,mse", 0) == 0);
  CHECK(csv.find("Transformer,DL,nir,moisture,all") != std::string::npos);
  const std::string txt = report_text(report, kSubsetAll);
  CHECK(txt.find("Transformer (ref)") != std::string::npos);
  CHECK(txt.find("KNNR") != std::string::npos);
}

TEST_CASE("region ranking") {
  const auto labels = region_labels();
  const TargetScaler identity;
  const Matrix train_x = column({0, 1});
  std::vector<LoadedModel> models;
  models.push_back({fit(KnnSpec{1}, train_x, vec({1.5, 1.7}), Property::Cadmium, RangeTag::Vis), identity});
  models.push_back({fit(KnnSpec{2}, train_x, vec({1.5, 1.7}), Property::Cadmium, RangeTag::Nir), identity});
  models.push_back({fit(KnnSpec{1}, train_x, vec({1.7, 1.7}), Property::Cadmium, RangeTag::Nir), identity});

  RegionBatches batches;
  batches["santander-0106"][RangeTag::Vis] = column({0, 1});
  batches["santander-0106"][RangeTag::Nir] = column({0, 1});
  const RegionReport report = region_generalization(models, batches, labels);
  REQUIRE(report.cells.size() == 4);
  const auto cd = std::find_if(report.cells.begin(), report.cells.end(),
                               [](const RegionCell& c) { return c.property == Property::Cadmium; });
  REQUIRE(cd->predictions.size() == 3);
  CHECK(cd->lab == 1.70);
  CHECK(cd->predictions[0].value == doctest::Approx(1.70));
  CHECK(cd->predictions[0].rank == 1);
  CHECK(cd->predictions[1].range == RangeTag::Nir);
  CHECK(cd->predictions[1].variance == 0.0);
  CHECK(cd->predictions[2].range == RangeTag::Vis);
  CHECK(cd->predictions[2].variance > 0.0);
  CHECK(cd->predictions[1].abs_error == cd->predictions[2].abs_error);

  std::vector<LoadedModel> one(models.begin(), models.begin() + 1);
  const RegionReport single = region_generalization(one, batches, labels);
  const auto c1 = std::find_if(single.cells.begin(), single.cells.end(),
                               [](const RegionCell& c) { return c.property == Property::Cadmium; });
  CHECK(c1->predictions.size() == 1);
  CHECK(c1->predictions[0].rank == 1);
  CHECK(region_csv(report).find("santander-0106,Santander,cadmium") != std::string::npos);
  CHECK_FALSE(region_text(report).empty());

  RegionBatches empty;
  empty["huila-0606"][RangeTag::Nir] = Matrix(0, 1);
  CHECK_KIND(region_generalization(models, empty, labels), ErrorKind::Coverage);
  RegionBatches unknown;
  unknown["nowhere"][RangeTag::Nir] = column({0});
  CHECK_KIND(region_generalization(models, unknown, labels), ErrorKind::Integrity);
}
