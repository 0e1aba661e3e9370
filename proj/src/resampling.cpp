#include "cocoa/resampling.hpp"

#include <algorithm>
#include <numeric>
#include <thread>

#include "cocoa/rng.hpp"

namespace cocoa {

namespace {

Spectrum realization(std::span<const Spectrum> spectra, const BootstrapConfig& cfg,
                     std::size_t k, std::vector<std::size_t>& scratch) {
  const std::size_t n = spectra.size();
  const std::string& batch = spectra.front().meta.batch_id;
  KeyedRng rng(cfg.seed, "bootstrap:" + batch, k);

  std::vector<std::size_t> picks(cfg.subset_size);
  if (cfg.with_replacement) {
    for (auto& p : picks) p = rng.below(n);
  } else {
    scratch.resize(n);
    std::iota(scratch.begin(), scratch.end(), std::size_t{0});
    for (std::size_t i = 0; i < cfg.subset_size; ++i) {
      const std::size_t j = i + rng.below(n - i);
      std::swap(scratch[i], scratch[j]);
      picks[i] = scratch[i];
    }
  }
  // Summing in index order makes s == N reproduce the global mean exactly.
  std::sort(picks.begin(), picks.end());

  Spectrum out;
  out.grid = spectra.front().grid;
  out.kind = spectra.front().kind;
  out.meta.batch_id = batch;
  out.meta.scan_index = static_cast<std::int64_t>(k);
  out.values.assign(spectra.front().size(), 0.0);
  for (std::size_t p : picks) {
    const auto& v = spectra[p].values;
    for (std::size_t b = 0; b < v.size(); ++b) out.values[b] += v[b];
  }
  const double inv = 1.0 / static_cast<double>(cfg.subset_size);
  for (double& v : out.values) v *= inv;
  return out;
}

}  // namespace

std::vector<Spectrum> bootstrap_means(std::span<const Spectrum> spectra,
                                      const BootstrapConfig& cfg, unsigned threads) {
  if (spectra.empty()) fail(ErrorKind::Config, "bootstrap needs at least one spectrum");
  if (cfg.realizations < 1) fail(ErrorKind::Config, "bootstrap realizations must be >= 1");
  if (cfg.subset_size < 1) fail(ErrorKind::Config, "bootstrap subset size must be >= 1");
  if (!cfg.with_replacement && cfg.subset_size > spectra.size()) {
    fail(ErrorKind::Config, "bootstrap subset size " + std::to_string(cfg.subset_size) +
                                " exceeds the " + std::to_string(spectra.size()) +
                                " available spectra");
  }
  for (const auto& s : spectra) {
    if (!same_grid(s.grid, spectra.front().grid) || s.size() != spectra.front().size()) {
      fail(ErrorKind::Dimension, "bootstrap input spectra are on different grids");
    }
  }

  std::vector<Spectrum> out(cfg.realizations);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cfg.realizations)));
  auto work = [&](std::size_t first, std::size_t last) {
    std::vector<std::size_t> scratch;
    for (std::size_t k = first; k < last; ++k) out[k] = realization(spectra, cfg, k, scratch);
  };
  if (threads == 1) {
    work(0, cfg.realizations);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (cfg.realizations + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t first = t * chunk;
      const std::size_t last = std::min(cfg.realizations, first + chunk);
      if (first < last) pool.emplace_back(work, first, last);
    }
  }
  return out;
}

Vector DatasetSplit::train_targets(Property p) const {
  Vector y(static_cast<Eigen::Index>(train_rows.size()));
  for (std::size_t i = 0; i < train_rows.size(); ++i) {
    y[static_cast<Eigen::Index>(i)] = train_rows[i].targets[static_cast<std::size_t>(p)];
  }
  return y;
}

Vector DatasetSplit::test_targets(Property p) const {
  Vector y(static_cast<Eigen::Index>(test_rows.size()));
  for (std::size_t i = 0; i < test_rows.size(); ++i) {
    y[static_cast<Eigen::Index>(i)] = test_rows[i].targets[static_cast<std::size_t>(p)];
  }
  return y;
}

DatasetSplit assemble_dataset(const BatchRealizations& per_batch,
                              std::span<const BatchRecord> labels, const SplitPolicy& policy,
                              std::uint64_t seed) {
  if (!(policy.within_batch_test_fraction >= 0.0 && policy.within_batch_test_fraction <= 1.0)) {
    fail(ErrorKind::Config, "within-batch test fraction must lie in [0, 1]");
  }
  DatasetSplit split;
  std::vector<const Spectrum*> train;
  std::vector<const Spectrum*> test;

  for (const auto& [batch_id, reals] : per_batch) {
    if (reals.empty()) continue;
    auto label = std::find_if(labels.begin(), labels.end(),
                              [&](const BatchRecord& r) { return r.batch_id == batch_id; });
    if (label == labels.end()) {
      fail(ErrorKind::Integrity, "batch '" + batch_id + "' has realizations but no label row");
    }
    if (!split.grid) {
      split.grid = reals.front().grid;
      split.range = split.grid->range();
    }
    const bool held_out = policy.test_batch_ids.contains(batch_id);
    auto make_row = [&](const Spectrum& s) {
      FeatureRow row;
      row.batch_id = batch_id;
      row.range = split.range;
      row.realization = s.meta.scan_index;
      row.targets = label->targets();
      row.held_out_batch = held_out;
      return row;
    };
    if (held_out) {
      for (const auto& s : reals) {
        test.push_back(&s);
        split.test_rows.push_back(make_row(s));
      }
      continue;
    }
    std::vector<std::size_t> order(reals.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    KeyedRng rng(seed, "split:" + batch_id, 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const auto n_test = static_cast<std::size_t>(
        std::floor(policy.within_batch_test_fraction * static_cast<double>(reals.size()) + 1e-9));
    std::vector<bool> is_test(reals.size(), false);
    for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;
    for (std::size_t i = 0; i < reals.size(); ++i) {
      (is_test[i] ? test : train).push_back(&reals[i]);
      (is_test[i] ? split.test_rows : split.train_rows).push_back(make_row(reals[i]));
    }
  }

  auto fill = [&](const std::vector<const Spectrum*>& rows, Matrix& m) {
    const Eigen::Index bands = split.grid ? static_cast<Eigen::Index>(split.grid->size()) : 0;
    m.resize(static_cast<Eigen::Index>(rows.size()), bands);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!same_grid(rows[r]->grid, split.grid)) {
        fail(ErrorKind::Dimension, "realizations in one split use different grids");
      }
      for (Eigen::Index c = 0; c < bands; ++c) {
        m(static_cast<Eigen::Index>(r), c) = rows[r]->values[static_cast<std::size_t>(c)];
      }
    }
  };
  fill(train, split.train_x);
  fill(test, split.test_x);
  return split;
}

TargetScaler::TargetScaler(std::array<double, 4> min, std::array<double, 4> max)
    : min_(min), max_(max) {
  for (std::size_t p = 0; p < 4; ++p) {
    if (!(max_[p] > min_[p])) {
      fail(ErrorKind::ConstantTarget, "property '" +
                                          std::string(to_string(static_cast<Property>(p))) +
                                          "' is constant on the training rows");
    }
  }
}

double TargetScaler::forward(Property p, double value) const {
  const auto i = static_cast<std::size_t>(p);
  return (value - min_[i]) / (max_[i] - min_[i]);
}

double TargetScaler::inverse(Property p, double value) const {
  const auto i = static_cast<std::size_t>(p);
  return value * (max_[i] - min_[i]) + min_[i];
}

NormalizedSplit normalize_targets(const DatasetSplit& split) {
  if (split.train_rows.empty()) fail(ErrorKind::Data, "cannot normalize an empty training set");
  std::array<double, 4> lo;
  std::array<double, 4> hi;
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (const auto& row : split.train_rows) {
    for (std::size_t p = 0; p < 4; ++p) {
      lo[p] = std::min(lo[p], row.targets[p]);
      hi[p] = std::max(hi[p], row.targets[p]);
    }
  }
  NormalizedSplit out{split, TargetScaler(lo, hi)};
  auto apply = [&](std::vector<FeatureRow>& rows) {
    for (auto& row : rows) {
      for (Property p : kAllProperties) {
        auto& t = row.targets[static_cast<std::size_t>(p)];
        t = out.scaler.forward(p, t);
      }
    }
  };
  apply(out.split.train_rows);
  apply(out.split.test_rows);
  return out;
}

}  // namespace cocoa
