#include "cocoa/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cocoa/rng.hpp"

namespace cocoa {

namespace {

GridPtr uniform_grid(double start, double stop, double step, RangeTag tag) {
  std::vector<double> v;
  for (double w = start; w <= stop + 1e-9; w += step) v.push_back(std::round(w * 1e6) / 1e6);
  return make_grid(std::move(v), tag);
}

double gaussian(double x, double center, double width) {
  const double z = (x - center) / width;
  return std::exp(-0.5 * z * z);
}

std::chrono::year_month_day ymd(int y, unsigned m, unsigned d) {
  return std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m},
                                     std::chrono::day{d}};
}

struct LinkRange {
  double lo;
  double hi;
};

constexpr LinkRange kLinkRange[4] = {{0.3, 1.0}, {4.0, 9.0}, {0.0, 6.0}, {15.0, 45.0}};

}  // namespace

SynthProfile default_profile(RangeTag range) {
  SynthProfile p;
  auto link = [](Property prop, std::string band, double gain) {
    const LinkRange r = kLinkRange[static_cast<std::size_t>(prop)];
    return PropertyLink{prop, std::move(band), LinkMode::Amplitude, r.lo, r.hi, gain};
  };
  if (range == RangeTag::Vis) {
    p.grid = uniform_grid(450.0, 850.0, 4.0, RangeTag::Vis);
    p.bands = {{"ferment", 540.0, 18.0, 0.02},
               {"moisture", 610.0, 18.0, -0.02},
               {"pigment", 660.0, 30.0, -0.05},
               {"cadmium", 700.0, 18.0, 0.02},
               {"polyphenol", 770.0, 18.0, -0.02}};
    p.white_center = 650.0;
    p.white_width = 200.0;
  } else {
    p.grid = uniform_grid(1050.0, 2050.0, 10.0, RangeTag::Nir);
    p.baseline_start = 0.55;
    p.baseline_end = 0.15;
    p.bands = {{"ferment", 1220.0, 40.0, 0.02},
               {"moisture", 1450.0, 40.0, -0.03},
               {"cadmium", 1680.0, 40.0, 0.02},
               {"lipid", 1760.0, 25.0, -0.04},
               {"polyphenol", 1900.0, 40.0, -0.02}};
    p.white_center = 1400.0;
    p.white_width = 450.0;
  }
  p.links = {link(Property::Fermentation, "ferment", 0.12), link(Property::Moisture, "moisture", -0.12),
             link(Property::Cadmium, "cadmium", 0.12), link(Property::Polyphenols, "polyphenol", 0.12)};
  return p;
}

nlohmann::json to_json(const SynthProfile& p) {
  nlohmann::json bands = nlohmann::json::array();
  for (const auto& b : p.bands) {
    bands.push_back({{"name", b.name}, {"center", b.center}, {"width", b.width}, {"amplitude", b.amplitude}});
  }
  nlohmann::json links = nlohmann::json::array();
  for (const auto& l : p.links) {
    links.push_back({{"property", to_string(l.property)},
                     {"band", l.band},
                     {"mode", l.mode == LinkMode::Amplitude ? "amplitude" : "shift"},
                     {"lo", l.lo},
                     {"hi", l.hi},
                     {"gain", l.gain}});
  }
  return {{"grid", p.grid->values()},
          {"baseline_start", p.baseline_start},
          {"baseline_end", p.baseline_end},
          {"bands", bands},
          {"links", links},
          {"noise_sd", p.noise_sd},
          {"scan_gain_sd", p.scan_gain_sd},
          {"belt_fraction", p.belt_fraction},
          {"belt_level", p.belt_level},
          {"belt_references", p.belt_references},
          {"white_floor", p.white_floor},
          {"white_peak", p.white_peak},
          {"white_center", p.white_center},
          {"white_width", p.white_width},
          {"black_level", p.black_level}};
}

SynthProfile synth_profile_from_json(const nlohmann::json& j, RangeTag range) {
  SynthProfile p = default_profile(range);
  try {
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      if (g.is_array()) {
        p.grid = make_grid(g.get<std::vector<double>>(), range);
      } else {
        p.grid = uniform_grid(g.at("start").get<double>(), g.at("stop").get<double>(),
                              g.at("step").get<double>(), range);
      }
    }
    auto num = [&](const char* key, double& out) {
      if (j.contains(key)) out = j.at(key).get<double>();
    };
    num("baseline_start", p.baseline_start);
    num("baseline_end", p.baseline_end);
    num("noise_sd", p.noise_sd);
    num("scan_gain_sd", p.scan_gain_sd);
    num("belt_fraction", p.belt_fraction);
    num("belt_level", p.belt_level);
    num("white_floor", p.white_floor);
    num("white_peak", p.white_peak);
    num("white_center", p.white_center);
    num("white_width", p.white_width);
    num("black_level", p.black_level);
    if (j.contains("belt_references")) p.belt_references = j.at("belt_references").get<std::size_t>();
    if (j.contains("bands")) {
      p.bands.clear();
      for (const auto& b : j.at("bands")) {
        p.bands.push_back({b.at("name").get<std::string>(), b.at("center").get<double>(),
                           b.at("width").get<double>(), b.at("amplitude").get<double>()});
      }
    }
    if (j.contains("links")) {
      p.links.clear();
      for (const auto& l : j.at("links")) {
        PropertyLink link;
        link.property = parse_property(l.at("property").get<std::string>());
        link.band = l.at("band").get<std::string>();
        const std::string mode = l.value("mode", "amplitude");
        if (mode != "amplitude" && mode != "shift") {
          fail(ErrorKind::Config, "synth link mode must be amplitude or shift");
        }
        link.mode = mode == "shift" ? LinkMode::Shift : LinkMode::Amplitude;
        link.lo = l.at("lo").get<double>();
        link.hi = l.at("hi").get<double>();
        link.gain = l.at("gain").get<double>();
        p.links.push_back(std::move(link));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, std::string("invalid synth profile: ") + e.what());
  }
  if (p.noise_sd < 0.0 || p.scan_gain_sd < 0.0) fail(ErrorKind::Config, "synth noise must be >= 0");
  if (p.belt_fraction < 0.0 || p.belt_fraction > 1.0) {
    fail(ErrorKind::Config, "synth belt_fraction must be in [0, 1]");
  }
  if (!(p.white_floor + p.white_peak > p.black_level) || p.white_floor <= p.black_level) {
    fail(ErrorKind::Config, "synth white reference must exceed the black level");
  }
  for (const auto& l : p.links) {
    if (!(l.hi > l.lo)) fail(ErrorKind::Config, "synth link needs hi > lo");
    const bool known = std::any_of(p.bands.begin(), p.bands.end(),
                                   [&](const GaussianBand& b) { return b.name == l.band; });
    if (!known) fail(ErrorKind::Config, "synth link names unknown band '" + l.band + "'");
  }
  return p;
}

Vector bean_reflectance(const SynthProfile& profile, const BatchRecord& labels) {
  std::vector<GaussianBand> bands = profile.bands;
  for (const auto& link : profile.links) {
    const double t = (labels.target(link.property) - link.lo) / (link.hi - link.lo);
    for (auto& b : bands) {
      if (b.name != link.band) continue;
      if (link.mode == LinkMode::Amplitude) b.amplitude += link.gain * t;
      else b.center += link.gain * t;
    }
  }
  const WavelengthGrid& g = *profile.grid;
  const double first = g.front();
  const double span = g.back() > first ? g.back() - first : 1.0;
  Vector r(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double w = g[i];
    double v = profile.baseline_start + (profile.baseline_end - profile.baseline_start) * (w - first) / span;
    for (const auto& b : bands) v += b.amplitude * gaussian(w, b.center, b.width);
    r[static_cast<Eigen::Index>(i)] = std::clamp(v, 0.0, 1.0);
  }
  return r;
}

SynthBatch generate_batch(const SynthProfile& profile, const BatchRecord& labels,
                          std::size_t n_scans, std::uint64_t seed) {
  if (n_scans < 1) fail(ErrorKind::Config, "generate_batch needs at least one scan");
  const WavelengthGrid& g = *profile.grid;
  const std::size_t bands = g.size();
  const std::uint64_t stream =
      derive_key(seed, fnv1a64(labels.batch_id), fnv1a64(to_string(g.range())));

  SynthBatch out;
  Spectrum white{profile.grid, std::vector<double>(bands), SpectrumKind::Intensity,
                 {labels.batch_id, 0, std::nullopt}};
  Spectrum black = white;
  for (std::size_t i = 0; i < bands; ++i) {
    white.values[i] = profile.white_floor + profile.white_peak * gaussian(g[i], profile.white_center, profile.white_width);
    black.values[i] = profile.black_level;
  }
  out.calibration = {white, black};

  const Vector bean = bean_reflectance(profile, labels);
  auto synthesize = [&](KeyedRng& rng, bool belt, std::int64_t index) {
    Spectrum s{profile.grid, std::vector<double>(bands), SpectrumKind::Intensity,
               {labels.batch_id, index, std::nullopt}};
    const double gain = profile.scan_gain_sd > 0.0 ? 1.0 + profile.scan_gain_sd * rng.normal() : 1.0;
    for (std::size_t i = 0; i < bands; ++i) {
      const double refl = belt ? profile.belt_level : bean[static_cast<Eigen::Index>(i)] * gain;
      const double noise = profile.noise_sd > 0.0 ? profile.noise_sd * rng.normal() : 0.0;
      const double span = white.values[i] - black.values[i];
      s.values[i] = black.values[i] + span * refl + span * noise;
    }
    return s;
  };

  const auto n_belt = static_cast<std::size_t>(
      std::llround(profile.belt_fraction * static_cast<double>(n_scans)));
  out.is_belt.assign(n_scans, false);
  {
    std::vector<std::size_t> order(n_scans);
    std::iota(order.begin(), order.end(), std::size_t{0});
    KeyedRng rng(derive_key(stream, fnv1a64("belt-positions")));
    for (std::size_t i = 0; i < n_belt; ++i) {
      std::swap(order[i], order[i + rng.below(n_scans - i)]);
      out.is_belt[order[i]] = true;
    }
  }
  for (std::size_t k = 0; k < n_scans; ++k) {
    KeyedRng rng(derive_key(stream, fnv1a64("scan"), k));
    out.scans.push_back(synthesize(rng, out.is_belt[k], static_cast<std::int64_t>(k)));
  }
  for (std::size_t k = 0; k < profile.belt_references; ++k) {
    KeyedRng rng(derive_key(stream, fnv1a64("belt-reference"), k));
    out.belt_references.push_back(synthesize(rng, true, static_cast<std::int64_t>(k)));
  }
  return out;
}

std::vector<BatchRecord> campaign_labels() {
  struct Row {
    int y;
    unsigned m, d;
    double ferm, moist, cd;
    bool below;
    double poly, hours;
  };
  static constexpr Row kRows[] = {
      {2024, 4, 15, 60, 5.12, 2.14, false, 41.30, 96},
      {2024, 4, 15, 66, 4.93, 1.29, false, 34.24, 144},
      {2024, 4, 15, 84, 4.80, 1.25, false, 40.38, 264},
      {2024, 4, 15, 92, 4.75, 1.23, false, 39.81, 264},
      {2024, 6, 27, 73, 4.79, 2.57, false, 32.85, 144},
      {2024, 6, 27, 85, 4.94, 1.69, false, 39.75, 110},
      {2024, 6, 27, 94, 4.56, 2.19, false, 28.78, 216},
      {2024, 6, 27, 96, 5.09, 1.73, false, 23.74, 252},
      {2024, 10, 22, 66, 5.82, 5.55, false, 27.66, 96},
      {2024, 10, 22, 94, 5.68, 4.80, false, 23.05, 144},
      {2024, 10, 22, 96, 5.67, 3.65, false, 25.09, 216},
      {2024, 10, 22, 100, 5.67, 3.14, false, 22.76, 252},
      {2024, 11, 22, 30, 6.68, 0.09, true, 35.41, 30},
      {2024, 11, 22, 45, 6.60, 0.09, true, 37.29, 45},
      {2024, 11, 22, 70, 6.87, 0.09, true, 36.48, 70},
      {2024, 11, 22, 70, 8.44, 0.09, true, 25.90, 70},
      {2025, 1, 18, 44, 4.78, 2.65, false, 39.16, 30},
      {2025, 1, 18, 70, 4.88, 2.72, false, 16.69, 45},
      {2025, 1, 18, 87, 5.01, 2.24, false, 35.77, 70},
      {2025, 1, 18, 96, 4.16, 1.70, false, 37.00, 70},
  };
  std::vector<BatchRecord> out;
  int id = 1;
  for (const auto& r : kRows) {
    BatchRecord b;
    b.batch_id = std::to_string(id++);
    b.date = ymd(r.y, r.m, r.d);
    b.region = "Santander";
    b.country = "Colombia";
    b.fermentation_level = r.ferm / 100.0;
    b.moisture = r.moist;
    b.cadmium = r.cd;
    b.cadmium_below_detection = r.below;
    b.polyphenols = r.poly;
    b.fermentation_hours = r.hours;
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<BatchRecord> region_labels() {
  auto rec = [](std::string id, std::chrono::year_month_day date, std::string region,
                std::string country, double ferm, double moist, double cd, bool below, double poly) {
    BatchRecord b;
    b.batch_id = std::move(id);
    b.date = date;
    b.region = std::move(region);
    b.country = std::move(country);
    b.fermentation_level = ferm / 100.0;
    b.moisture = moist;
    b.cadmium = cd;
    b.cadmium_below_detection = below;
    b.polyphenols = poly;
    return b;
  };
  return {rec("santander-0106", ymd(2025, 6, 1), "Santander", "Colombia", 96, 4.16, 1.70, false, 37.00),
          rec("huila-0606", ymd(2025, 6, 6), "Huila", "Colombia", 60, 5.02, 0.84, false, 35.21),
          rec("putumayo-1006", ymd(2025, 6, 10), "Putumayo", "Colombia", 96, 5.02, 0.09, true, 28.80),
          rec("cusco-1206", ymd(2025, 6, 12), "Cusco", "Peru", 100, 5.36, 2.52, false, 33.94)};
}

Dataset generate_corpus(const std::vector<SynthProfile>& profiles,
                        const std::vector<BatchRecord>& labels, const CorpusOptions& options) {
  Dataset d;
  d.labels = labels;
  for (const auto& label : labels) {
    validate(label);
    BatchEntry entry;
    entry.batch_id = label.batch_id;
    entry.region = label.region;
    for (const auto& profile : profiles) {
      SynthBatch b = generate_batch(profile, label, options.scans_per_batch, options.seed);
      RangeData rd;
      rd.grid = profile.grid;
      rd.scans = std::move(b.scans);
      rd.white = std::move(b.calibration.white);
      rd.black = std::move(b.calibration.black);
      rd.belt = std::move(b.belt_references);
      entry.ranges[profile.grid->range()] = std::move(rd);
    }
    d.batches.push_back(std::move(entry));
  }
  return d;
}

}  // namespace cocoa
