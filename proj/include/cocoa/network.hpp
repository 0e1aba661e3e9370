#pragma once

#include <span>
#include <string>
#include <vector>

#include "cocoa/autodiff.hpp"
#include "cocoa/model_spec.hpp"
#include "cocoa/types.hpp"

namespace cocoa {

/// Feed-forward network assembled from a NetworkSpec. Inputs are rows of
/// band values; Conv1D layers see them as one channel along the band axis.
class Network {
 public:
  Network(const NetworkSpec& spec, std::size_t input_width);
  // Copies own their parameters; they never share tape nodes.
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  std::size_t input_width() const { return input_width_; }
  std::size_t parameter_count() const;
  std::vector<autodiff::Tensor>& parameters() { return params_; }

  /// Builds the graph for a batch and returns the [rows, 1] output.
  autodiff::Tensor forward(const Matrix& x) const;
  Vector predict(const Matrix& x) const;
  double loss(const Matrix& x, const Vector& y) const;

  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> flat);

 private:
  struct Op {
    LayerSpec layer;
    int weight = -1;  // index into params_
    int bias = -1;
  };

  NetworkSpec spec_;
  std::size_t input_width_;
  std::vector<Op> ops_;
  std::vector<autodiff::Tensor> params_;
};

/// Gradient of the mean squared loss over (x, y) with respect to every
/// parameter, flattened in parameter order.
std::vector<double> network_gradients(Network& net, const Matrix& x, const Vector& y);

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  std::size_t best_epoch = 0;
  bool early_stopped = false;
};

/// Adam training with an optional validation hold-out and patience-based
/// early stopping; the best-validation weights are kept. Throws Divergence
/// when the loss becomes non-finite.
TrainHistory train_network(Network& net, const NetworkSpec& spec, const Matrix& x,
                           const Vector& y);

}  // namespace cocoa
