#pragma once

#include <doctest.h>

#include <functional>
#include <random>

#include "cocoa/error.hpp"
#include "cocoa/types.hpp"
#include "oracles.hpp"

namespace testing {

inline cocoa::ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const cocoa::Error& e) {
    return e.kind();
  }
  FAIL("expected a cocoa::Error");
  return cocoa::ErrorKind::Io;
}

inline cocoa::GridPtr index_grid(std::size_t n, double start = 400.0, double step = 1.0,
                                 cocoa::RangeTag tag = cocoa::RangeTag::Vis) {
  std::vector<double> nm(n);
  for (std::size_t i = 0; i < n; ++i) nm[i] = start + step * static_cast<double>(i);
  return cocoa::make_grid(std::move(nm), tag);
}

inline cocoa::Spectrum spectrum(const cocoa::GridPtr& grid, std::vector<double> values,
                                std::int64_t index = 0, const std::string& batch = "b",
                                cocoa::SpectrumKind kind = cocoa::SpectrumKind::Intensity) {
  cocoa::Spectrum s{grid, std::move(values), kind, {}};
  s.meta.batch_id = batch;
  s.meta.scan_index = index;
  return s;
}

}  // namespace testing

#define CHECK_KIND(expr, k) CHECK(testing::kind_of([&] { (void)(expr); }) == (k))
