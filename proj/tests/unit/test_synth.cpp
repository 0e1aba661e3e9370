#include "cocoa/background_filter.hpp"
#include "cocoa/calibration.hpp"
#include "cocoa/resampling.hpp"
#include "cocoa/spectral_io.hpp"
#include "cocoa/synth.hpp"
#include "common.hpp"

using namespace cocoa;

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = 0.5 * static_cast<double>(i + j);
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a), rb = ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / static_cast<double>(ra.size());
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / static_cast<double>(rb.size());
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  return num / std::sqrt(da * db);
}

}  // namespace

TEST_CASE("noiseless scans calibrate to the prototype") {
  for (RangeTag r : {RangeTag::Vis, RangeTag::Nir}) {
    SynthProfile p = default_profile(r);
    p.noise_sd = 0.0;
    p.scan_gain_sd = 0.0;
    p.belt_fraction = 0.0;
    const BatchRecord label = campaign_labels()[4];
    const SynthBatch b = generate_batch(p, label, 12, 3);
    const Vector proto = bean_reflectance(p, label);
    CHECK(proto.minCoeff() >= 0.0);
    CHECK(proto.maxCoeff() <= 1.0);
    for (const auto& s : b.scans) {
      const auto refl = compute_reflectance(s, b.calibration);
      for (std::size_t i = 0; i < refl.spectrum.size(); ++i) {
        CHECK(std::abs(refl.spectrum.values[i] - proto[static_cast<Eigen::Index>(i)]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("generation is deterministic") {
  const SynthProfile p = default_profile(RangeTag::Nir);
  const BatchRecord label = campaign_labels()[0];
  const SynthBatch a = generate_batch(p, label, 30, 8);
  const SynthBatch b = generate_batch(p, label, 30, 8);
  CHECK(a.scans == b.scans);
  CHECK(a.is_belt == b.is_belt);
  CHECK(a.scans != generate_batch(p, label, 30, 9).scans);
  auto labels = campaign_labels();
  labels.resize(3);
  CHECK(generate_corpus({p}, labels, {20, 4}) == generate_corpus({p}, labels, {20, 4}));
  CHECK(generate_corpus({p}, {}, {20, 4}).batches.empty());
}

TEST_CASE("top-n keeps exactly the bean scans") {
  for (RangeTag r : {RangeTag::Vis, RangeTag::Nir}) {
    SynthProfile p = default_profile(r);
    p.belt_fraction = 0.3;
    const SynthBatch b = generate_batch(p, campaign_labels()[7], 100, 12);
    CHECK(std::count(b.is_belt.begin(), b.is_belt.end(), true) == 30);
    const ReferenceSet refs(b.belt_references);
    const FilterResult f = filter(b.scans, refs, TopNPolicy{70});
    REQUIRE(f.kept.size() == 70);
    for (std::size_t i = 0; i < b.scans.size(); ++i) {
      CHECK(f.kept_flags[i] == !b.is_belt[i]);
      double nearest = std::numeric_limits<double>::infinity();
      for (const auto& ref : b.belt_references) nearest = std::min(nearest, oracle::sam(b.scans[i].values, ref.values));
      CHECK(std::abs(f.distances[i] - nearest) <= 1e-10);
    }
  }
}

TEST_CASE("monotone links give rank-correlated features") {
  const SynthProfile p = default_profile(RangeTag::Vis);
  const auto labels = campaign_labels();
  for (const auto& link : p.links) {
    const auto band = std::find_if(p.bands.begin(), p.bands.end(),
                                   [&](const GaussianBand& g) { return g.name == link.band; });
    REQUIRE(band != p.bands.end());
    const auto grid = p.grid->values();
    const auto at = static_cast<std::size_t>(
        std::min_element(grid.begin(), grid.end(), [&](double a, double b) {
          return std::abs(a - band->center) < std::abs(b - band->center);
        }) - grid.begin());
    std::vector<double> feature, target;
    for (const auto& rec : labels) {
      const SynthBatch b = generate_batch(p, rec, 40, 5);
      double sum = 0.0;
      for (const auto& s : b.scans) sum += compute_reflectance(s, b.calibration).spectrum.values[at];
      feature.push_back(sum / static_cast<double>(b.scans.size()));
      target.push_back(rec.target(link.property));
    }
    const double rho = spearman(feature, target);
    CHECK_MESSAGE(std::abs(rho) > 0.9, to_string(link.property));
    CHECK((rho > 0) == (link.gain > 0));
  }
}

TEST_CASE("profiles round trip through json and validate") {
  const SynthProfile p = default_profile(RangeTag::Nir);
  const SynthProfile q = synth_profile_from_json(to_json(p), RangeTag::Nir);
  CHECK(to_json(q) == to_json(p));
  CHECK_KIND(synth_profile_from_json(nlohmann::json{{"noise_sd", -1}}, RangeTag::Nir), ErrorKind::Config);
  CHECK_KIND(synth_profile_from_json(nlohmann::json{{"belt_fraction", 1.5}}, RangeTag::Vis), ErrorKind::Config);
}

TEST_CASE("label tables") {
  const auto c = campaign_labels();
  REQUIRE(c.size() == 20);
  CHECK(c[19].fermentation_level == doctest::Approx(0.96));
  for (const auto& r : c) CHECK_NOTHROW(validate(r));
  const auto regions = region_labels();
  REQUIRE(regions.size() == 4);
  CHECK(regions[2].cadmium == 0.09);
  CHECK(regions[2].cadmium_below_detection);
}
