#include "cocoa/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cocoa/rng.hpp"

namespace cocoa {

using autodiff::Tensor;

namespace {

Tensor uniform_tensor(autodiff::Shape shape, double limit, KeyedRng& rng) {
  std::vector<double> v(autodiff::numel(shape));
  for (double& x : v) x = (2.0 * rng.uniform() - 1.0) * limit;
  return Tensor::make(std::move(shape), std::move(v));
}

Tensor rows_tensor(const Matrix& x) {
  std::vector<double> v(x.data(), x.data() + x.size());
  return Tensor::make({static_cast<std::size_t>(x.rows()), static_cast<std::size_t>(x.cols())},
                      std::move(v));
}

}  // namespace

Network::Network(const NetworkSpec& spec, std::size_t input_width)
    : spec_(spec), input_width_(input_width) {
  validate(ModelSpec{spec});
  if (input_width < 1) fail(ErrorKind::Config, "network input width must be >= 1");
  KeyedRng rng(spec.seed, "network-init", 0);

  // Tracked per-sample shape: {features} or {channels, length}.
  std::vector<std::size_t> shape{input_width};
  auto to_channels = [&] {
    if (shape.size() == 1) shape = {1, shape[0]};
  };
  for (const auto& layer : spec.layers) {
    Op op{layer};
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      if (shape.size() != 1) fail(ErrorKind::Config, "Dense after Conv1D/Pool needs a Flatten layer");
      const double limit = std::sqrt(6.0 / static_cast<double>(shape[0] + d->width));
      op.weight = static_cast<int>(params_.size());
      params_.push_back(uniform_tensor({shape[0], d->width}, limit, rng));
      op.bias = static_cast<int>(params_.size());
      params_.push_back(Tensor::make({d->width}, std::vector<double>(d->width, 0.0)));
      shape = {d->width};
    } else if (const auto* c = std::get_if<Conv1DLayer>(&layer)) {
      to_channels();
      if (shape[1] < c->kernel_width) {
        fail(ErrorKind::Config, "Conv1D kernel wider than its input length");
      }
      const double fan = static_cast<double>((shape[0] + c->channels) * c->kernel_width);
      op.weight = static_cast<int>(params_.size());
      params_.push_back(uniform_tensor({c->channels, shape[0], c->kernel_width},
                                       std::sqrt(6.0 / fan), rng));
      op.bias = static_cast<int>(params_.size());
      params_.push_back(Tensor::make({c->channels}, std::vector<double>(c->channels, 0.0)));
      shape = {c->channels, (shape[1] - c->kernel_width) / c->stride + 1};
    } else if (const auto* p = std::get_if<PoolLayer>(&layer)) {
      to_channels();
      if (shape[1] / p->width < 1) fail(ErrorKind::Config, "Pool window wider than its input");
      shape = {shape[0], shape[1] / p->width};
    } else if (std::holds_alternative<FlattenLayer>(layer)) {
      if (shape.size() == 2) shape = {shape[0] * shape[1]};
    }
    ops_.push_back(op);
  }
}

Network::Network(const Network& other)
    : spec_(other.spec_), input_width_(other.input_width_), ops_(other.ops_) {
  params_.reserve(other.params_.size());
  for (const auto& p : other.params_) {
    params_.push_back(Tensor::make(p.shape(), {p.value().begin(), p.value().end()}));
  }
}

Network& Network::operator=(const Network& other) {
  if (this != &other) *this = Network(other);
  return *this;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

Tensor Network::forward(const Matrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != input_width_) {
    fail(ErrorKind::Dimension, "network expects " + std::to_string(input_width_) +
                                   " features, got " + std::to_string(x.cols()));
  }
  const std::size_t batch = static_cast<std::size_t>(x.rows());
  Tensor h = rows_tensor(x);
  auto to_channels = [&] {
    if (h.shape().size() == 2) h = autodiff::reshape(h, {batch, 1, h.shape()[1]});
  };
  for (const auto& op : ops_) {
    if (std::holds_alternative<DenseLayer>(op.layer)) {
      h = autodiff::add_bias(autodiff::matmul(h, params_[op.weight]), params_[op.bias]);
    } else if (const auto* c = std::get_if<Conv1DLayer>(&op.layer)) {
      to_channels();
      h = autodiff::add_bias(autodiff::conv1d(h, params_[op.weight], c->stride), params_[op.bias]);
    } else if (const auto* a = std::get_if<ActivationLayer>(&op.layer)) {
      h = a->fn == ActivationFn::Relu ? autodiff::relu(h) : autodiff::tanh(h);
    } else if (const auto* p = std::get_if<PoolLayer>(&op.layer)) {
      to_channels();
      h = autodiff::avg_pool1d(h, p->width);
    } else if (h.shape().size() == 3) {
      h = autodiff::reshape(h, {batch, h.shape()[1] * h.shape()[2]});
    }
  }
  return h;
}

Vector Network::predict(const Matrix& x) const {
  Vector out(x.rows());
  constexpr Eigen::Index kChunk = 256;
  for (Eigen::Index start = 0; start < x.rows(); start += kChunk) {
    const Eigen::Index n = std::min(kChunk, x.rows() - start);
    const Tensor y = forward(x.middleRows(start, n));
    for (Eigen::Index i = 0; i < n; ++i) out[start + i] = y.value()[static_cast<std::size_t>(i)];
  }
  return out;
}

double Network::loss(const Matrix& x, const Vector& y) const {
  const Vector p = predict(x);
  return (p - y).squaredNorm() / static_cast<double>(y.size());
}

std::vector<double> Network::flat_parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& p : params_) flat.insert(flat.end(), p.value().begin(), p.value().end());
  return flat;
}

void Network::set_flat_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    fail(ErrorKind::Dimension, "flat parameter vector has the wrong length");
  }
  std::size_t at = 0;
  for (auto& p : params_) {
    auto dst = p.mutable_value();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(at), dst.size(), dst.begin());
    at += dst.size();
  }
}

std::vector<double> network_gradients(Network& net, const Matrix& x, const Vector& y) {
  for (auto& p : net.parameters()) p.zero_grad();
  const Tensor out = net.forward(x);
  const Tensor loss = autodiff::mse_loss(out, std::span<const double>(y.data(), y.size()));
  autodiff::backward(loss);
  std::vector<double> flat;
  flat.reserve(net.parameter_count());
  for (const auto& p : net.parameters()) flat.insert(flat.end(), p.grad().begin(), p.grad().end());
  return flat;
}

TrainHistory train_network(Network& net, const NetworkSpec& spec, const Matrix& x,
                           const Vector& y) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n < 2 || static_cast<std::size_t>(y.size()) != n) {
    fail(ErrorKind::Data, "network training needs at least two rows with matching targets");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  {
    KeyedRng rng(spec.seed, "validation-split", 0);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  }
  std::size_t n_val = 0;
  if (spec.validation_fraction > 0.0) {
    n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(spec.validation_fraction * static_cast<double>(n))));
    n_val = std::min(n_val, n - 1);
  }
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  Matrix x_val(static_cast<Eigen::Index>(n_val), x.cols());
  Vector y_val(static_cast<Eigen::Index>(n_val));
  for (std::size_t i = 0; i < n_val; ++i) {
    x_val.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(val_idx[i]));
    y_val[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(val_idx[i])];
  }

  auto& params = net.parameters();
  std::vector<std::vector<double>> m(params.size());
  std::vector<std::vector<double>> v(params.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    m[p].assign(params[p].size(), 0.0);
    v[p].assign(params[p].size(), 0.0);
  }
  const auto& opt = spec.optimizer;
  double beta1_t = 1.0;
  double beta2_t = 1.0;

  TrainHistory history;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_params = net.flat_parameters();
  std::size_t stale = 0;
  const std::size_t bs = std::min(spec.batch_size, train_idx.size());

  for (std::size_t epoch = 0; epoch < spec.max_epochs; ++epoch) {
    KeyedRng rng(spec.seed, "epoch", epoch);
    std::vector<std::size_t> perm = train_idx;
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < perm.size(); start += bs) {
      const std::size_t rows = std::min(bs, perm.size() - start);
      Matrix xb(static_cast<Eigen::Index>(rows), x.cols());
      std::vector<double> yb(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        xb.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(perm[start + r]));
        yb[r] = y[static_cast<Eigen::Index>(perm[start + r])];
      }
      for (auto& p : params) p.zero_grad();
      const Tensor loss = autodiff::mse_loss(net.forward(xb), yb);
      if (!std::isfinite(loss.item())) {
        fail(ErrorKind::Divergence, "network loss became non-finite at epoch " + std::to_string(epoch));
      }
      autodiff::backward(loss);
      epoch_loss += loss.item() * static_cast<double>(rows);

      beta1_t *= opt.beta1;
      beta2_t *= opt.beta2;
      for (std::size_t p = 0; p < params.size(); ++p) {
        auto w = params[p].mutable_value();
        const auto g = params[p].grad();
        for (std::size_t i = 0; i < w.size(); ++i) {
          m[p][i] = opt.beta1 * m[p][i] + (1.0 - opt.beta1) * g[i];
          v[p][i] = opt.beta2 * v[p][i] + (1.0 - opt.beta2) * g[i] * g[i];
          const double mhat = m[p][i] / (1.0 - beta1_t);
          const double vhat = v[p][i] / (1.0 - beta2_t);
          w[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
        }
      }
    }
    history.train_loss.push_back(epoch_loss / static_cast<double>(perm.size()));

    if (n_val == 0) {
      history.best_epoch = epoch;
      continue;
    }
    const double val = net.loss(x_val, y_val);
    if (!std::isfinite(val)) {
      fail(ErrorKind::Divergence, "validation loss became non-finite at epoch " + std::to_string(epoch));
    }
    history.validation_loss.push_back(val);
    if (val < best) {
      best = val;
      best_params = net.flat_parameters();
      history.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= spec.patience) {
      history.early_stopped = true;
      break;
    }
  }
  if (n_val > 0) net.set_flat_parameters(best_params);
  return history;
}

}  // namespace cocoa
