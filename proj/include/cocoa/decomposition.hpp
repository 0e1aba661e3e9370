#pragma once

#include "cocoa/types.hpp"

namespace cocoa {

/// Principal axes of mean-centred spectra. `components` holds one unit-norm
/// loading per row; each loading's largest-magnitude coordinate is positive.
struct PcaModel {
  Vector mean;
  Matrix components;  // k x bands
  Vector explained_variance;

  Eigen::Index k() const { return components.rows(); }
};

/// Requires rows >= 2 and 1 <= k <= min(rows - 1, bands).
PcaModel fit_pca(const Matrix& x, Eigen::Index k = 2);

/// (x - mean) * components^T
Matrix project(const PcaModel& model, const Matrix& x);

}  // namespace cocoa
