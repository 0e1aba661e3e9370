#include "cocoa/background_filter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cocoa {

double sam_angle(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorKind::Dimension, "spectral angle on unequal lengths");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (!(na > 0.0) || !(nb > 0.0)) {
    fail(ErrorKind::DegenerateSpectrum, "spectral angle of a zero-norm spectrum");
  }
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::acos(std::clamp(c, -1.0, 1.0));
}

double sam_angle(const Spectrum& a, const Spectrum& b) {
  if (!same_grid(a.grid, b.grid)) fail(ErrorKind::Dimension, "spectral angle across grids");
  return sam_angle(std::span<const double>(a.values), std::span<const double>(b.values));
}

ReferenceSet::ReferenceSet(std::vector<Spectrum> refs) : refs_(std::move(refs)) {
  if (refs_.empty()) fail(ErrorKind::Domain, "background reference set is empty");
  for (const auto& r : refs_) {
    double n = 0.0;
    for (double v : r.values) n += v * v;
    if (!(n > 0.0)) fail(ErrorKind::DegenerateSpectrum, "background reference has zero norm");
  }
}

double distance_to_background(const Spectrum& s, const ReferenceSet& refs) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : refs.refs()) best = std::min(best, sam_angle(s, r));
  return best;
}

std::vector<bool> select_threshold(std::span<const double> distances, double tau) {
  if (!(tau > 0.0)) fail(ErrorKind::Config, "SAM threshold must be positive");
  std::vector<bool> keep(distances.size());
  for (std::size_t i = 0; i < distances.size(); ++i) keep[i] = distances[i] >= tau;
  return keep;
}

std::vector<bool> select_top_n(std::span<const double> distances,
                               std::span<const std::int64_t> scan_index, std::size_t n) {
  std::vector<std::size_t> order(distances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (distances[a] != distances[b]) return distances[a] > distances[b];
    return scan_index[a] < scan_index[b];
  });
  std::vector<bool> keep(distances.size(), false);
  for (std::size_t i = 0; i < std::min(n, order.size()); ++i) keep[order[i]] = true;
  return keep;
}

FilterResult filter(std::span<const Spectrum> spectra, const ReferenceSet& refs,
                    const FilterPolicy& policy) {
  FilterResult out;
  out.distances.reserve(spectra.size());
  for (const auto& s : spectra) out.distances.push_back(distance_to_background(s, refs));

  if (const auto* th = std::get_if<ThresholdPolicy>(&policy)) {
    out.kept_flags = select_threshold(out.distances, th->tau);
  } else {
    const auto& top = std::get<TopNPolicy>(policy);
    if (top.n > spectra.size()) {
      out.warnings.push_back("top-n selection asked for " + std::to_string(top.n) +
                             " spectra but only " + std::to_string(spectra.size()) +
                             " are available; keeping all");
    }
    std::vector<std::int64_t> idx;
    idx.reserve(spectra.size());
    for (const auto& s : spectra) idx.push_back(s.meta.scan_index);
    out.kept_flags = select_top_n(out.distances, idx, top.n);
  }
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    (out.kept_flags[i] ? out.kept : out.discarded).push_back(spectra[i]);
  }
  return out;
}

}  // namespace cocoa
