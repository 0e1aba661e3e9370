#include <numbers>

#include "cocoa/background_filter.hpp"
#include "common.hpp"

using namespace cocoa;
using testing::index_grid;
using testing::spectrum;

namespace {

std::vector<double> random_vector(std::mt19937_64& gen, std::size_t n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = nd(gen);
  return v;
}

// Unit vectors at the given angles from (1, 0) in the plane.
std::vector<Spectrum> fan(const GridPtr& g, const std::vector<double>& angles) {
  std::vector<Spectrum> out;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    out.push_back(spectrum(g, {std::cos(angles[i]), std::sin(angles[i])}, static_cast<std::int64_t>(i)));
  }
  return out;
}

}  // namespace

TEST_CASE("sam_angle examples") {
  const std::vector<double> x{1, 0}, y{0, 1}, d{1, 1};
  CHECK(sam_angle(x, x) == 0.0);
  CHECK(sam_angle(x, y) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-15));
  CHECK(sam_angle(x, d) == doctest::Approx(std::numbers::pi / 4).epsilon(1e-15));
  const std::vector<double> z{0, 0};
  CHECK_KIND(sam_angle(x, z), ErrorKind::DegenerateSpectrum);
}

TEST_CASE("sam_angle is symmetric, scale invariant and a metric on the sphere") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.01, 100.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 63);
    const auto a = random_vector(gen, n);
    const auto b = random_vector(gen, n);
    const auto c = random_vector(gen, n);
    const double ab = sam_angle(a, b);
    CHECK(std::abs(ab - oracle::sam(a, b)) <= 1e-10);
    CHECK(std::abs(ab - sam_angle(b, a)) <= 1e-12);
    auto scaled = a;
    const double k = u(gen);
    for (double& v : scaled) v *= k;
    CHECK(std::abs(sam_angle(scaled, b) - ab) <= 1e-12);
    CHECK(sam_angle(a, c) <= ab + sam_angle(b, c) + 1e-9);
  }
}

TEST_CASE("distance_to_background takes the minimum angle") {
  const auto g = index_grid(2);
  const ReferenceSet refs({spectrum(g, {1, 0}), spectrum(g, {0, 1})});
  CHECK(distance_to_background(spectrum(g, {1, 1}), refs) == doctest::Approx(std::numbers::pi / 4));
  CHECK(distance_to_background(spectrum(g, {0, 3}), refs) == 0.0);
  const ReferenceSet single({spectrum(g, {1, 0})});
  const auto s = spectrum(g, {0.3, 0.7});
  CHECK(distance_to_background(s, single) == sam_angle(s, single.refs()[0]));
  CHECK_KIND(ReferenceSet({}), ErrorKind::Domain);
  CHECK_KIND(ReferenceSet({spectrum(g, {0, 0})}), ErrorKind::DegenerateSpectrum);
}

TEST_CASE("filter policies") {
  const auto g = index_grid(2);
  const ReferenceSet refs({spectrum(g, {1, 0})});
  const auto five = fan(g, {0.3, 0.1, 0.5, 0.2, 0.4});

  const auto top2 = filter(five, refs, TopNPolicy{2});
  REQUIRE(top2.kept.size() == 2);
  CHECK(top2.kept[0].meta.scan_index == 2);
  CHECK(top2.kept[1].meta.scan_index == 4);
  CHECK(top2.discarded.size() == 3);

  const auto all = filter(five, refs, TopNPolicy{5});
  CHECK(all.kept == five);
  const auto over = filter(five, refs, TopNPolicy{9});
  CHECK(over.kept == five);
  CHECK_FALSE(over.warnings.empty());

  const std::vector<Spectrum> belt(4, spectrum(g, {1, 0}));
  CHECK(filter(belt, refs, ThresholdPolicy{0.25}).kept.empty());
  CHECK_KIND(filter(five, refs, ThresholdPolicy{-0.25}), ErrorKind::Config);
}

TEST_CASE("selection matches brute force on random distances with ties") {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<int> level(0, 9);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + static_cast<std::size_t>(trial % 40);
    std::vector<double> d(m);
    std::vector<std::int64_t> idx(m);
    for (std::size_t i = 0; i < m; ++i) {
      d[i] = 0.05 * level(gen);
      idx[i] = static_cast<std::int64_t>((i * 7) % m);
    }
    const double tau = 0.05 * level(gen) + 0.01;
    CHECK(select_threshold(d, tau) == oracle::threshold(d, tau));
    std::vector<bool> prev(m, false);
    for (std::size_t n = 0; n <= m + 1; ++n) {
      const auto keep = select_top_n(d, idx, n);
      CHECK(keep == oracle::top_n(d, idx, n));
      for (std::size_t i = 0; i < m; ++i) CHECK((!prev[i] || keep[i]));
      prev = keep;
    }
    std::vector<bool> wider = select_threshold(d, tau);
    const auto narrower = select_threshold(d, tau + 0.1);
    for (std::size_t i = 0; i < m; ++i) CHECK((!narrower[i] || wider[i]));
  }
}
