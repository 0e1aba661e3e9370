#include <algorithm>
#include <cmath>
#include <numeric>

#include "cocoa/detail/fitted.hpp"
#include "cocoa/rng.hpp"

namespace cocoa::detail {

double RegressionTree::predict(const double* row) const {
  std::size_t at = 0;
  while (nodes[at].feature >= 0) {
    const auto& n = nodes[at];
    at = static_cast<std::size_t>(row[n.feature] <= n.threshold ? n.left : n.right);
  }
  return nodes[at].value;
}

namespace {

struct Split {
  std::int64_t feature = -1;
  double threshold = 0.0;
  double score = std::numeric_limits<double>::infinity();
};

// Lowest summed child SSE over valid cut points of one feature.
void scan_feature(const Matrix& x, const Vector& y, const std::vector<std::size_t>& rows,
                  Eigen::Index f, std::size_t min_leaf,
                  std::vector<std::pair<double, double>>& scratch, Split& best) {
  const std::size_t n = rows.size();
  scratch.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    scratch[i] = {x(r, f), y[r]};
  }
  std::sort(scratch.begin(), scratch.end());
  double total = 0.0;
  double total_sq = 0.0;
  for (const auto& [xv, yv] : scratch) {
    total += yv;
    total_sq += yv * yv;
  }
  double left = 0.0;
  double left_sq = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    left += scratch[i].second;
    left_sq += scratch[i].second * scratch[i].second;
    const std::size_t nl = i + 1;
    const std::size_t nr = n - nl;
    if (nl < min_leaf || nr < min_leaf) continue;
    if (!(scratch[i].first < scratch[i + 1].first)) continue;
    const double right = total - left;
    const double right_sq = total_sq - left_sq;
    const double sse = (left_sq - left * left / static_cast<double>(nl)) +
                       (right_sq - right * right / static_cast<double>(nr));
    if (sse < best.score) {
      best.score = sse;
      best.feature = f;
      double mid = 0.5 * (scratch[i].first + scratch[i + 1].first);
      // Guard against the midpoint rounding onto the right-hand value.
      if (!(mid < scratch[i + 1].first)) mid = scratch[i].first;
      best.threshold = mid;
    }
  }
}

}  // namespace

RegressionTree grow_tree(const ForestSpec& spec, const Matrix& x, const Vector& y,
                         std::vector<std::size_t> rows, std::uint64_t key) {
  KeyedRng rng(key);
  const auto bands = static_cast<std::size_t>(x.cols());
  const std::size_t per_split =
      spec.features_per_split == 0
          ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(bands))))
          : std::min(spec.features_per_split, bands);

  RegressionTree tree;
  struct Pending {
    std::size_t node;
    std::vector<std::size_t> rows;
    std::size_t depth;
  };
  tree.nodes.emplace_back();
  std::vector<Pending> stack;
  stack.push_back({0, std::move(rows), 0});
  std::vector<std::size_t> features(bands);
  std::vector<std::pair<double, double>> scratch;

  while (!stack.empty()) {
    Pending p = std::move(stack.back());
    stack.pop_back();
    double sum = 0.0;
    bool pure = true;
    const double first = y[static_cast<Eigen::Index>(p.rows.front())];
    for (std::size_t r : p.rows) {
      const double v = y[static_cast<Eigen::Index>(r)];
      sum += v;
      pure = pure && v == first;
    }
    tree.nodes[p.node].value = sum / static_cast<double>(p.rows.size());
    const bool depth_capped = spec.max_depth > 0 && p.depth >= spec.max_depth;
    if (pure || depth_capped || p.rows.size() < 2 * spec.min_leaf) continue;

    std::iota(features.begin(), features.end(), std::size_t{0});
    Split best;
    // Sampled features first; the rest only if none of them admits a split.
    for (std::size_t i = 0; i < bands; ++i) {
      const std::size_t j = i + rng.below(bands - i);
      std::swap(features[i], features[j]);
      if (i >= per_split && best.feature >= 0) break;
      scan_feature(x, y, p.rows, static_cast<Eigen::Index>(features[i]), spec.min_leaf, scratch, best);
    }
    if (best.feature < 0) continue;

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (std::size_t r : p.rows) {
      (x(static_cast<Eigen::Index>(r), best.feature) <= best.threshold ? left_rows : right_rows)
          .push_back(r);
    }
    const auto left_id = static_cast<std::int64_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    const auto right_id = static_cast<std::int64_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    auto& node = tree.nodes[p.node];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left_id;
    node.right = right_id;
    stack.push_back({static_cast<std::size_t>(right_id), std::move(right_rows), p.depth + 1});
    stack.push_back({static_cast<std::size_t>(left_id), std::move(left_rows), p.depth + 1});
  }
  return tree;
}

std::unique_ptr<ForestModel> ForestModel::fit(const ForestSpec& spec, const Matrix& x,
                                              const Vector& y) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n < 1) fail(ErrorKind::Data, "forest needs at least one training row");
  auto model = std::make_unique<ForestModel>();
  const std::size_t draws = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(spec.bag_fraction * static_cast<double>(n))));
  for (std::size_t t = 0; t < spec.trees; ++t) {
    const std::uint64_t key = derive_key(spec.seed, fnv1a64("forest-tree"), t);
    KeyedRng rng(derive_key(key, 1));
    std::vector<std::size_t> rows;
    if (spec.bootstrap) {
      rows.resize(draws);
      for (auto& r : rows) r = rng.below(n);
    } else {
      rows.resize(n);
      std::iota(rows.begin(), rows.end(), std::size_t{0});
      if (draws < n) {
        for (std::size_t i = 0; i < draws; ++i) std::swap(rows[i], rows[i + rng.below(n - i)]);
        rows.resize(draws);
      }
    }
    model->trees_.push_back(grow_tree(spec, x, y, std::move(rows), derive_key(key, 2)));
  }
  return model;
}

Vector ForestModel::predict(const Matrix& x) const {
  Vector out(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Eigen::RowVectorXd row = x.row(r);
    double acc = 0.0;
    for (const auto& t : trees_) acc += t.predict(row.data());
    out[r] = acc / static_cast<double>(trees_.size());
  }
  return out;
}

void ForestModel::save(BinaryWriter& out) const {
  out.u64(trees_.size());
  for (const auto& t : trees_) {
    out.u64(t.nodes.size());
    for (const auto& n : t.nodes) {
      out.pod(n.feature);
      out.f64(n.threshold);
      out.pod(n.left);
      out.pod(n.right);
      out.f64(n.value);
    }
  }
}

std::unique_ptr<ForestModel> ForestModel::load(BinaryReader& in) {
  auto model = std::make_unique<ForestModel>();
  const auto trees = in.u64();
  for (std::uint64_t t = 0; t < trees; ++t) {
    RegressionTree tree;
    const auto nodes = in.u64();
    for (std::uint64_t i = 0; i < nodes; ++i) {
      TreeNode n;
      n.feature = in.pod<std::int64_t>();
      n.threshold = in.f64();
      n.left = in.pod<std::int64_t>();
      n.right = in.pod<std::int64_t>();
      n.value = in.f64();
      if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 ||
                             static_cast<std::uint64_t>(std::max(n.left, n.right)) >= nodes)) {
        fail(ErrorKind::Integrity, "forest container has a dangling tree node");
      }
      tree.nodes.push_back(n);
    }
    if (tree.nodes.empty()) fail(ErrorKind::Integrity, "forest container has an empty tree");
    model->trees_.push_back(std::move(tree));
  }
  if (model->trees_.empty()) fail(ErrorKind::Integrity, "forest container has no trees");
  return model;
}

}  // namespace cocoa::detail
