#include "cocoa/autodiff.hpp"
#include "cocoa/network.hpp"
#include "common.hpp"

using namespace cocoa;
namespace ad = cocoa::autodiff;

namespace {

Matrix random_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix x(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = nd(gen);
  return x;
}

Vector random_vector(std::mt19937_64& gen, Eigen::Index n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = nd(gen);
  return v;
}

// Central differences on every parameter; returns the worst relative error.
double worst_gradient_error(Network& net, const Matrix& x, const Vector& y) {
  const auto analytic = network_gradients(net, x, y);
  auto flat = net.flat_parameters();
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double keep = flat[i];
    flat[i] = keep + h;
    net.set_flat_parameters(flat);
    const double up = net.loss(x, y);
    flat[i] = keep - h;
    net.set_flat_parameters(flat);
    const double down = net.loss(x, y);
    flat[i] = keep;
    net.set_flat_parameters(flat);
    worst = std::max(worst, oracle::relative_error(analytic[i], (up - down) / (2 * h)));
  }
  return worst;
}

}  // namespace

TEST_CASE("dense network gradients match finite differences") {
  std::mt19937_64 gen(31);
  NetworkSpec spec;
  spec.layers = {DenseLayer{4}, ActivationLayer{ActivationFn::Tanh}, DenseLayer{1}};
  spec.seed = 5;
  Network net(spec, 8);
  CHECK(net.parameter_count() == 8 * 4 + 4 + 4 + 1);
  CHECK(worst_gradient_error(net, random_matrix(gen, 5, 8), random_vector(gen, 5)) <= 1e-4);
}

TEST_CASE("convolutional network gradients match finite differences") {
  std::mt19937_64 gen(32);
  NetworkSpec spec;
  spec.layers = {Conv1DLayer{2, 3, 2}, ActivationLayer{ActivationFn::Tanh}, PoolLayer{2},
                 FlattenLayer{}, DenseLayer{3}, ActivationLayer{ActivationFn::Relu}, DenseLayer{1}};
  spec.seed = 6;
  Network net(spec, 21);
  CHECK(worst_gradient_error(net, random_matrix(gen, 4, 21), random_vector(gen, 4)) <= 1e-4);
}

TEST_CASE("zero weights and zero input give zero bias gradients") {
  NetworkSpec spec;
  spec.layers = {DenseLayer{1}};
  Network net(spec, 3);
  net.set_flat_parameters(std::vector<double>(net.parameter_count(), 0.0));
  const auto g = network_gradients(net, Matrix::Zero(4, 3), Vector::Zero(4));
  for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("a unit-tap convolution is a strided selection") {
  std::mt19937_64 gen(33);
  const std::size_t length = 11, stride = 2, width = 3;
  const std::size_t out_len = (length - width) / stride + 1;
  std::vector<double> xv(2 * length);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (double& v : xv) v = nd(gen);
  std::vector<double> weights(out_len);
  for (double& v : weights) v = nd(gen);

  const ad::Tensor x = ad::Tensor::make({2, 1, length}, xv);
  const ad::Tensor w = ad::Tensor::make({1, 1, width}, {1.0, 0.0, 0.0});
  const ad::Tensor conv = ad::reshape(ad::conv1d(x, w, stride), {2, out_len});
  const ad::Tensor head = ad::Tensor::make({out_len, 1}, weights);
  ad::backward(ad::mse_loss(ad::matmul(conv, head), std::vector<double>{0.5, -0.5}));

  std::vector<double> sel(length * out_len, 0.0);
  for (std::size_t j = 0; j < out_len; ++j) sel[(j * stride) * out_len + j] = 1.0;
  const ad::Tensor x2 = ad::Tensor::make({2, length}, xv);
  const ad::Tensor s = ad::Tensor::make({length, out_len}, sel);
  const ad::Tensor dense = ad::matmul(x2, s);
  const ad::Tensor head2 = ad::Tensor::make({out_len, 1}, weights);
  ad::backward(ad::mse_loss(ad::matmul(dense, head2), std::vector<double>{0.5, -0.5}));

  for (std::size_t i = 0; i < conv.size(); ++i) CHECK(conv.value()[i] == dense.value()[i]);
  for (std::size_t i = 0; i < xv.size(); ++i) CHECK(std::abs(x.grad()[i] - x2.grad()[i]) <= 1e-12);
  for (std::size_t i = 0; i < out_len; ++i) CHECK(std::abs(head.grad()[i] - head2.grad()[i]) <= 1e-12);
}

TEST_CASE("network memorizes ten rows") {
  std::mt19937_64 gen(34);
  NetworkSpec spec;
  spec.layers = {DenseLayer{16}, ActivationLayer{ActivationFn::Tanh}, DenseLayer{1}};
  spec.optimizer.lr = 1e-2;
  spec.batch_size = 10;
  spec.max_epochs = 5000;
  spec.validation_fraction = 0.0;
  spec.seed = 3;
  const Matrix x = random_matrix(gen, 10, 4);
  Vector y(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index i = 0; i < 10; ++i) y[i] = u(gen);
  Network net(spec, 4);
  train_network(net, spec, x, y);
  CHECK(net.loss(x, y) <= 1e-3);
}

TEST_CASE("training keeps the best validation weights and stops early") {
  std::mt19937_64 gen(35);
  NetworkSpec spec;
  spec.layers = {DenseLayer{8}, ActivationLayer{ActivationFn::Relu}, DenseLayer{1}};
  spec.max_epochs = 400;
  spec.patience = 5;
  spec.seed = 1;
  const Matrix x = random_matrix(gen, 40, 3);
  const Vector y = random_vector(gen, 40);
  Network net(spec, 3);
  const TrainHistory h = train_network(net, spec, x, y);
  CHECK(h.validation_loss.size() == h.train_loss.size());
  CHECK(h.best_epoch < h.validation_loss.size());
  if (h.early_stopped) CHECK(h.validation_loss.size() < 400);
  const double best = *std::min_element(h.validation_loss.begin(), h.validation_loss.end());
  CHECK(h.validation_loss[h.best_epoch] == best);

  Network wild(spec, 3);
  const Vector huge = y * 1e300;
  CHECK_KIND(train_network(wild, spec, x, huge), ErrorKind::Divergence);
}
