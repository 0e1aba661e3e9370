#include "cocoa/decomposition.hpp"

#include <Eigen/SVD>

namespace cocoa {

PcaModel fit_pca(const Matrix& x, Eigen::Index k) {
  const Eigen::Index rows = x.rows();
  const Eigen::Index bands = x.cols();
  if (rows < 2) fail(ErrorKind::Rank, "PCA needs at least two rows");
  if (k < 1 || k > std::min(rows - 1, bands)) {
    fail(ErrorKind::Rank, "PCA component count " + std::to_string(k) + " exceeds min(rows - 1, bands) = " +
                              std::to_string(std::min(rows - 1, bands)));
  }
  if (!x.allFinite()) fail(ErrorKind::Data, "PCA input contains non-finite values");

  PcaModel model;
  model.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - model.mean.transpose();
  if (centered.cwiseAbs().maxCoeff() == 0.0) {
    fail(ErrorKind::ZeroVariance, "PCA input has zero variance");
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const auto& v = svd.matrixV();

  model.components.resize(k, bands);
  model.explained_variance.resize(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::VectorXd loading = v.col(c);
    Eigen::Index arg = 0;
    loading.cwiseAbs().maxCoeff(&arg);
    if (loading[arg] < 0.0) loading = -loading;
    model.components.row(c) = loading.transpose();
    model.explained_variance[c] = sv[c] * sv[c] / static_cast<double>(rows - 1);
  }
  return model;
}

Matrix project(const PcaModel& model, const Matrix& x) {
  if (x.cols() != model.mean.size()) {
    fail(ErrorKind::Dimension, "projection input has " + std::to_string(x.cols()) +
                                   " bands, model expects " + std::to_string(model.mean.size()));
  }
  return (x.rowwise() - model.mean.transpose()) * model.components.transpose();
}

}  // namespace cocoa
