#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace cocoa::autodiff {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);

// One vertex of the recorded computation. `backward` reads this node's grad
// and accumulates into the grads of `parents`.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backward;
};

/// Handle to a node in a reverse-mode tape. Copies share the node.
class Tensor {
 public:
  Tensor() = default;
  static Tensor make(Shape shape, std::vector<double> values);

  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::span<const double> value() const { return node_->value; }
  std::span<double> mutable_value() { return node_->value; }
  std::span<const double> grad() const { return node_->grad; }
  void zero_grad();
  double item() const;

  const std::shared_ptr<Node>& node() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  friend Tensor make_result(Shape, std::vector<std::shared_ptr<Node>>);
  std::shared_ptr<Node> node_;
};

// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
// [B,N] + [N], or [B,C,L] + [C]
Tensor add_bias(const Tensor& x, const Tensor& bias);
Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);
// x [B,C,L], w [O,C,K] -> [B,O,(L-K)/stride+1]
Tensor conv1d(const Tensor& x, const Tensor& w, std::size_t stride);
// [B,C,L] -> [B,C,L/width], mean over non-overlapping windows
Tensor avg_pool1d(const Tensor& x, std::size_t width);
Tensor reshape(const Tensor& x, Shape shape);
// Mean squared error of a [B,1] or [B] prediction against B targets; scalar.
Tensor mse_loss(const Tensor& pred, std::span<const double> target);

/// Back-propagates from a scalar root, accumulating into every upstream grad.
void backward(const Tensor& root);

}  // namespace cocoa::autodiff
