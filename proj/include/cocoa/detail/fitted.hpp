#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cocoa/detail/binary_io.hpp"
#include "cocoa/model_spec.hpp"
#include "cocoa/network.hpp"
#include "cocoa/types.hpp"

namespace cocoa::detail {

class FittedModel {
 public:
  virtual ~FittedModel() = default;
  virtual Vector predict(const Matrix& x) const = 0;
  virtual void save(BinaryWriter& out) const = 0;
};

// --- k-nearest neighbours -------------------------------------------------

class KnnModel final : public FittedModel {
 public:
  KnnModel(KnnSpec spec, Matrix x, Vector y);
  Vector predict(const Matrix& x) const override;
  void save(BinaryWriter& out) const override;
  static std::unique_ptr<KnnModel> load(const KnnSpec& spec, BinaryReader& in);

 private:
  KnnSpec spec_;
  Matrix x_;
  Vector y_;
};

// --- random forest (CART regression trees) ---------------------------------

struct TreeNode {
  std::int64_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // go left when x[feature] <= threshold
  std::int64_t left = -1;
  std::int64_t right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;
  double predict(const double* row) const;
};

RegressionTree grow_tree(const ForestSpec& spec, const Matrix& x, const Vector& y,
                         std::vector<std::size_t> rows, std::uint64_t key);

class ForestModel final : public FittedModel {
 public:
  static std::unique_ptr<ForestModel> fit(const ForestSpec& spec, const Matrix& x, const Vector& y);
  Vector predict(const Matrix& x) const override;
  void save(BinaryWriter& out) const override;
  static std::unique_ptr<ForestModel> load(BinaryReader& in);
  std::size_t tree_count() const { return trees_.size(); }

 private:
  std::vector<RegressionTree> trees_;
};

// --- epsilon-SVR ------------------------------------------------------------

struct SvrSolution {
  std::vector<double> alpha;       // alpha_i, in [0, C]
  std::vector<double> alpha_star;  // alpha_i^*, in [0, C]
  double bias = 0.0;               // f(x) = sum (alpha - alpha*) K(x_i, x) + bias
  std::size_t iterations = 0;
  bool converged = false;
  // Max violation of y_i G_i == rho over free variables at exit.
  double kkt_residual = 0.0;
};

double kernel(const SvrSpec& spec, const double* a, const double* b, Eigen::Index n);

/// SMO with second-order working-set selection on the epsilon-insensitive dual.
SvrSolution solve_svr(const SvrSpec& spec, const Matrix& x, const Vector& y);

class SvrModel final : public FittedModel {
 public:
  SvrModel(SvrSpec spec, Matrix support, Vector coef, double bias);
  Vector predict(const Matrix& x) const override;
  void save(BinaryWriter& out) const override;
  static std::unique_ptr<SvrModel> load(const SvrSpec& spec, BinaryReader& in);

 private:
  SvrSpec spec_;
  Matrix support_;
  Vector coef_;
  double bias_;
};

// --- networks ----------------------------------------------------------------

class NetworkModel final : public FittedModel {
 public:
  NetworkModel(Network net, Vector mean, Vector scale);
  Vector predict(const Matrix& x) const override;
  void save(BinaryWriter& out) const override;
  static std::unique_ptr<NetworkModel> load(const NetworkSpec& spec, BinaryReader& in);

 private:
  Network net_;
  Vector mean_;
  Vector scale_;
};

}  // namespace cocoa::detail
