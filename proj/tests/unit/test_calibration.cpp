#include "cocoa/calibration.hpp"
#include "common.hpp"

using namespace cocoa;
using testing::index_grid;
using testing::spectrum;

namespace {

CalibrationPair pair_on(const GridPtr& g, std::vector<double> white, std::vector<double> black) {
  return {spectrum(g, std::move(white)), spectrum(g, std::move(black))};
}

}  // namespace

TEST_CASE("reflectance of the references and their midpoint") {
  const auto g = index_grid(4);
  const auto cal = pair_on(g, {1000, 1200, 900, 1500}, {100, 110, 90, 120});
  const auto white = compute_reflectance(cal.white, cal);
  const auto black = compute_reflectance(cal.black, cal);
  std::vector<double> mid(4);
  for (std::size_t i = 0; i < 4; ++i) mid[i] = (cal.white.values[i] + cal.black.values[i]) / 2;
  const auto half = compute_reflectance(spectrum(g, mid), cal);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(white.spectrum.values[i] == 1.0);
    CHECK(black.spectrum.values[i] == 0.0);
    CHECK(half.spectrum.values[i] == doctest::Approx(0.5).epsilon(1e-15));
  }
  CHECK(white.spectrum.kind == SpectrumKind::Reflectance);
  CHECK(white.mask.count() == 0);
}

TEST_CASE("reflectance is clipped and masks dead bands") {
  const auto g = index_grid(4);
  const auto cal = pair_on(g, {1000, 100, 1000, 1000}, {100, 100, 100, 100});
  const auto r = compute_reflectance(spectrum(g, {5000, 500, 50, 550}), cal);
  CHECK(r.spectrum.values[0] == kReflectanceCeiling);
  CHECK(r.mask[1]);
  CHECK(r.spectrum.values[1] == 0.0);
  CHECK(r.spectrum.values[2] == 0.0);
  CHECK(r.spectrum.values[3] == doctest::Approx(0.5));
  CHECK(r.mask.count() == 1);

  const auto dead = pair_on(g, {1, 1, 1, 1}, {2, 2, 2, 2});
  CHECK_KIND(compute_reflectance(spectrum(g, {1, 1, 1, 1}), dead), ErrorKind::DegenerateCalibration);
  CHECK_KIND(compute_reflectance(spectrum(index_grid(3), {1, 1, 1}), cal), ErrorKind::Dimension);
}

TEST_CASE("reflectance is invariant to a common positive scale") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto g = index_grid(64);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> w(64), b(64), raw(64);
    for (std::size_t i = 0; i < 64; ++i) {
      b[i] = 50 + 50 * u(gen);
      w[i] = b[i] + 500 + 2000 * u(gen);
      raw[i] = b[i] + (w[i] - b[i]) * 1.2 * u(gen);
    }
    const double c = 0.01 + 100 * u(gen);
    auto scaled = [&](std::vector<double> v) {
      for (double& x : v) x *= c;
      return v;
    };
    const auto r1 = compute_reflectance(spectrum(g, raw), pair_on(g, w, b));
    const auto r2 = compute_reflectance(spectrum(g, scaled(raw)), pair_on(g, scaled(w), scaled(b)));
    for (std::size_t i = 0; i < 64; ++i) {
      CHECK(std::abs(r1.spectrum.values[i] - r2.spectrum.values[i]) <=
            1e-12 * std::max(1.0, std::abs(r1.spectrum.values[i])));
    }
  }
}

TEST_CASE("crop keeps inclusive bounds") {
  const auto g = index_grid(601, 400.0, 1.0);
  std::vector<double> v(601);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  const Spectrum s = spectrum(g, v);
  const Spectrum c = crop(s, {500, 800});
  CHECK(c.size() == 301);
  CHECK(c.grid->front() == 500.0);
  CHECK(c.grid->back() == 800.0);
  CHECK(c.values.front() == 100.0);
  CHECK(crop(s, {300, 1100}) == s);

  const Spectrum nested = crop(crop(s, {450, 900}), {500, 800});
  CHECK(nested == c);

  const auto nir = spectrum(index_grid(91, 1100.0, 10.0, RangeTag::Nir), std::vector<double>(91, 1.0));
  CHECK_KIND(crop(nir, {2100, 2200}), ErrorKind::EmptyWindow);
  CHECK_KIND(crop(nir, {1500, 1200}), ErrorKind::Domain);
}

TEST_CASE("saturation masks") {
  const auto g = index_grid(5);
  CHECK(mask_saturated(spectrum(g, {1, 2, 3, 4, 5}), 10).mask.count() == 0);
  const auto one = mask_saturated(spectrum(g, {1, 2, 10, 4, 5}), 10);
  CHECK(one.mask.count() == 1);
  CHECK(one.mask[2]);
  const auto all = mask_saturated(spectrum(g, {10, 11, 12, 13, 14}), 10);
  CHECK(all.mask.count() == 5);
  const auto cal = pair_on(g, {100, 100, 100, 100, 100}, {0, 0, 0, 0, 0});
  CHECK_KIND(compute_reflectance(spectrum(g, {10, 11, 12, 13, 14}), cal, all.mask),
             ErrorKind::DegenerateCalibration);
}

TEST_CASE("band masks merge and drop") {
  const auto g = index_grid(5);
  BandMask a(5), b(5);
  a.set(1);
  b.set(3);
  a.merge(b);
  a.merge(BandMask{});
  CHECK(a.count() == 2);
  const Spectrum s = drop_bands(spectrum(g, {0, 1, 2, 3, 4}), a);
  CHECK(s.values == std::vector<double>{0, 2, 4});
  CHECK(s.grid->values()[1] == 402.0);
  CHECK_KIND(a.merge(BandMask(4)), ErrorKind::Dimension);
}
