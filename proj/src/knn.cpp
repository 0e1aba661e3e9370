#include <algorithm>
#include <cmath>
#include <numeric>

#include "cocoa/detail/fitted.hpp"

namespace cocoa::detail {

KnnModel::KnnModel(KnnSpec spec, Matrix x, Vector y)
    : spec_(spec), x_(std::move(x)), y_(std::move(y)) {
  if (x_.rows() < 1) fail(ErrorKind::Data, "knn needs at least one training row");
}

Vector KnnModel::predict(const Matrix& x) const {
  if (x.cols() != x_.cols()) {
    fail(ErrorKind::Dimension, "knn query width " + std::to_string(x.cols()) +
                                   " does not match training width " + std::to_string(x_.cols()));
  }
  const auto n = static_cast<std::size_t>(x_.rows());
  const std::size_t k = std::min<std::size_t>(spec_.k, n);
  Vector out(x.rows());
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (Eigen::Index q = 0; q < x.rows(); ++q) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto diff = x_.row(static_cast<Eigen::Index>(i)) - x.row(q);
      const double d = spec_.distance == KnnDistance::Euclidean ? diff.squaredNorm()
                                                               : diff.cwiseAbs().sum();
      dist[i] = {d, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc += y_[static_cast<Eigen::Index>(dist[j].second)];
    out[q] = acc / static_cast<double>(k);
  }
  return out;
}

void KnnModel::save(BinaryWriter& out) const {
  out.matrix(x_);
  out.vector(y_);
}

std::unique_ptr<KnnModel> KnnModel::load(const KnnSpec& spec, BinaryReader& in) {
  Matrix x = in.matrix();
  Vector y = in.vector();
  if (y.size() != x.rows()) fail(ErrorKind::Integrity, "knn container rows mismatch");
  return std::make_unique<KnnModel>(spec, std::move(x), std::move(y));
}

}  // namespace cocoa::detail
