#include "cocoa/autodiff.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <unordered_set>

#include "cocoa/error.hpp"

namespace cocoa::autodiff {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor Tensor::make(Shape shape, std::vector<double> values) {
  if (numel(shape) != values.size()) {
    fail(ErrorKind::Dimension, "tensor values do not match its shape");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->grad.assign(values.size(), 0.0);
  node->value = std::move(values);
  return Tensor(std::move(node));
}

void Tensor::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

double Tensor::item() const {
  if (node_->value.size() != 1) fail(ErrorKind::Dimension, "item() on a non-scalar tensor");
  return node_->value[0];
}

Tensor make_result(Shape shape, std::vector<std::shared_ptr<Node>> parents) {
  auto node = std::make_shared<Node>();
  const std::size_t n = numel(shape);
  node->shape = std::move(shape);
  node->value.assign(n, 0.0);
  node->grad.assign(n, 0.0);
  node->parents = std::move(parents);
  return Tensor(std::move(node));
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) fail(ErrorKind::Dimension, what);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.shape().size() == 2 && b.shape().size() == 2 && a.shape()[1] == b.shape()[0],
          "matmul shape mismatch");
  const std::size_t m = a.shape()[0];
  const std::size_t k = a.shape()[1];
  const std::size_t n = b.shape()[1];
  Tensor out = make_result({m, n}, {a.node(), b.node()});
  Node* o = out.node().get();
  Node* pa = a.node().get();
  Node* pb = b.node().get();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa->value[i * k + p];
      if (av == 0.0) continue;
      const double* brow = &pb->value[p * n];
      double* orow = &o->value[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  o->backward = [o, pa, pb, m, k, n] {
    // dA = dO * B^T ; dB = A^T * dO
    for (std::size_t i = 0; i < m; ++i) {
      const double* grow = &o->grad[i * n];
      for (std::size_t p = 0; p < k; ++p) {
        const double* brow = &pb->value[p * n];
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
        pa->grad[i * k + p] += acc;
        const double av = pa->value[i * k + p];
        if (av == 0.0) continue;
        double* gb = &pb->grad[p * n];
        for (std::size_t j = 0; j < n; ++j) gb[j] += av * grow[j];
      }
    }
  };
  return out;
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  const auto& s = x.shape();
  require(bias.shape().size() == 1, "bias must be one-dimensional");
  std::size_t outer = 0;
  std::size_t channels = 0;
  std::size_t inner = 0;
  if (s.size() == 2) {
    outer = s[0];
    channels = s[1];
    inner = 1;
  } else if (s.size() == 3) {
    outer = s[0];
    channels = s[1];
    inner = s[2];
  } else {
    require(false, "add_bias expects a 2-D or 3-D tensor");
  }
  require(bias.shape()[0] == channels, "bias length mismatch");
  Tensor out = make_result(s, {x.node(), bias.node()});
  Node* o = out.node().get();
  Node* px = x.node().get();
  Node* pb = bias.node().get();
  for (std::size_t b = 0; b < outer; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t t = 0; t < inner; ++t) {
        const std::size_t i = (b * channels + c) * inner + t;
        o->value[i] = px->value[i] + pb->value[c];
      }
    }
  }
  o->backward = [o, px, pb, outer, channels, inner] {
    for (std::size_t b = 0; b < outer; ++b) {
      for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t t = 0; t < inner; ++t) {
          const std::size_t i = (b * channels + c) * inner + t;
          px->grad[i] += o->grad[i];
          pb->grad[c] += o->grad[i];
        }
      }
    }
  };
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out = make_result(x.shape(), {x.node()});
  Node* o = out.node().get();
  Node* px = x.node().get();
  for (std::size_t i = 0; i < px->value.size(); ++i) o->value[i] = std::max(0.0, px->value[i]);
  o->backward = [o, px] {
    for (std::size_t i = 0; i < px->value.size(); ++i) {
      if (px->value[i] > 0.0) px->grad[i] += o->grad[i];
    }
  };
  return out;
}

Tensor tanh(const Tensor& x) {
  Tensor out = make_result(x.shape(), {x.node()});
  Node* o = out.node().get();
  Node* px = x.node().get();
  for (std::size_t i = 0; i < px->value.size(); ++i) o->value[i] = std::tanh(px->value[i]);
  o->backward = [o, px] {
    for (std::size_t i = 0; i < px->value.size(); ++i) {
      const double t = o->value[i];
      px->grad[i] += o->grad[i] * (1.0 - t * t);
    }
  };
  return out;
}

Tensor conv1d(const Tensor& x, const Tensor& w, std::size_t stride) {
  require(x.shape().size() == 3 && w.shape().size() == 3, "conv1d expects 3-D input and weights");
  const std::size_t batch = x.shape()[0];
  const std::size_t cin = x.shape()[1];
  const std::size_t len = x.shape()[2];
  const std::size_t cout = w.shape()[0];
  const std::size_t kw = w.shape()[2];
  require(w.shape()[1] == cin, "conv1d channel mismatch");
  require(stride >= 1, "conv1d stride must be >= 1");
  require(len >= kw, "conv1d kernel wider than its input");
  const std::size_t lout = (len - kw) / stride + 1;
  Tensor out = make_result({batch, cout, lout}, {x.node(), w.node()});
  Node* o = out.node().get();
  Node* px = x.node().get();
  Node* pw = w.node().get();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t oc = 0; oc < cout; ++oc) {
      double* orow = &o->value[(b * cout + oc) * lout];
      for (std::size_t ic = 0; ic < cin; ++ic) {
        const double* xrow = &px->value[(b * cin + ic) * len];
        const double* wrow = &pw->value[(oc * cin + ic) * kw];
        for (std::size_t t = 0; t < lout; ++t) {
          const double* xs = xrow + t * stride;
          double acc = 0.0;
          for (std::size_t k = 0; k < kw; ++k) acc += wrow[k] * xs[k];
          orow[t] += acc;
        }
      }
    }
  }
  o->backward = [o, px, pw, batch, cin, len, cout, kw, lout, stride] {
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t oc = 0; oc < cout; ++oc) {
        const double* grow = &o->grad[(b * cout + oc) * lout];
        for (std::size_t ic = 0; ic < cin; ++ic) {
          const double* xrow = &px->value[(b * cin + ic) * len];
          double* gxrow = &px->grad[(b * cin + ic) * len];
          const double* wrow = &pw->value[(oc * cin + ic) * kw];
          double* gwrow = &pw->grad[(oc * cin + ic) * kw];
          for (std::size_t t = 0; t < lout; ++t) {
            const double g = grow[t];
            if (g == 0.0) continue;
            const std::size_t base = t * stride;
            for (std::size_t k = 0; k < kw; ++k) {
              gwrow[k] += g * xrow[base + k];
              gxrow[base + k] += g * wrow[k];
            }
          }
        }
      }
    }
  };
  return out;
}

Tensor avg_pool1d(const Tensor& x, std::size_t width) {
  require(x.shape().size() == 3, "avg_pool1d expects a 3-D tensor");
  require(width >= 1, "pool width must be >= 1");
  const std::size_t batch = x.shape()[0];
  const std::size_t ch = x.shape()[1];
  const std::size_t len = x.shape()[2];
  const std::size_t lout = len / width;
  require(lout >= 1, "pool window wider than its input");
  Tensor out = make_result({batch, ch, lout}, {x.node()});
  Node* o = out.node().get();
  Node* px = x.node().get();
  const double inv = 1.0 / static_cast<double>(width);
  for (std::size_t r = 0; r < batch * ch; ++r) {
    for (std::size_t t = 0; t < lout; ++t) {
      double acc = 0.0;
      for (std::size_t k = 0; k < width; ++k) acc += px->value[r * len + t * width + k];
      o->value[r * lout + t] = acc * inv;
    }
  }
  o->backward = [o, px, batch, ch, len, lout, width, inv] {
    for (std::size_t r = 0; r < batch * ch; ++r) {
      for (std::size_t t = 0; t < lout; ++t) {
        const double g = o->grad[r * lout + t] * inv;
        for (std::size_t k = 0; k < width; ++k) px->grad[r * len + t * width + k] += g;
      }
    }
  };
  return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
  require(numel(shape) == x.size(), "reshape changes the element count");
  Tensor out = make_result(std::move(shape), {x.node()});
  Node* o = out.node().get();
  Node* px = x.node().get();
  o->value = px->value;
  o->backward = [o, px] {
    for (std::size_t i = 0; i < px->grad.size(); ++i) px->grad[i] += o->grad[i];
  };
  return out;
}

Tensor mse_loss(const Tensor& pred, std::span<const double> target) {
  require(pred.size() == target.size() && !target.empty(), "loss target length mismatch");
  Tensor out = make_result({1}, {pred.node()});
  Node* o = out.node().get();
  Node* pp = pred.node().get();
  std::vector<double> residual(target.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    residual[i] = pp->value[i] - target[i];
    acc += residual[i] * residual[i];
  }
  const double inv = 1.0 / static_cast<double>(target.size());
  o->value[0] = acc * inv;
  o->backward = [o, pp, residual = std::move(residual), inv] {
    const double g = o->grad[0] * 2.0 * inv;
    for (std::size_t i = 0; i < residual.size(); ++i) pp->grad[i] += g * residual[i];
  };
  return out;
}

void backward(const Tensor& root) {
  if (root.size() != 1) fail(ErrorKind::Dimension, "backward needs a scalar root");
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  // Iterative post-order DFS gives a reverse topological order.
  std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward();
  }
}

}  // namespace cocoa::autodiff
