#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

#include "cocoa/detail/fitted.hpp"

namespace cocoa::detail {

double kernel(const SvrSpec& spec, const double* a, const double* b, Eigen::Index n) {
  if (spec.kernel == KernelType::Linear) {
    double dot = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) dot += a[i] * b[i];
    return dot;
  }
  double d2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-spec.gamma * d2);
}

namespace {

constexpr double kTau = 1e-12;
constexpr std::size_t kCacheBytes = std::size_t{256} << 20;

// Kernel rows K(a, .) over the training set, computed on demand.
class KernelCache {
 public:
  KernelCache(const SvrSpec& spec, const Matrix& x) : spec_(spec), x_(x) {
    const auto l = static_cast<std::size_t>(x.rows());
    capacity_ = std::max<std::size_t>(2, kCacheBytes / (std::max<std::size_t>(l, 1) * sizeof(double)));
    if (spec.kernel == KernelType::Rbf) sq_norm_ = x.rowwise().squaredNorm();
  }

  const std::vector<double>& row(std::size_t a) {
    if (auto it = rows_.find(a); it != rows_.end()) return it->second;
    if (rows_.size() >= capacity_) {
      rows_.erase(order_.front());
      order_.pop_front();
    }
    const Vector dots = x_ * x_.row(static_cast<Eigen::Index>(a)).transpose();
    std::vector<double> r(static_cast<std::size_t>(dots.size()));
    for (Eigen::Index b = 0; b < dots.size(); ++b) {
      if (spec_.kernel == KernelType::Linear) {
        r[static_cast<std::size_t>(b)] = dots[b];
      } else {
        const double d2 = std::max(0.0, sq_norm_[static_cast<Eigen::Index>(a)] + sq_norm_[b] - 2.0 * dots[b]);
        r[static_cast<std::size_t>(b)] = std::exp(-spec_.gamma * d2);
      }
    }
    order_.push_back(a);
    return rows_.emplace(a, std::move(r)).first->second;
  }

 private:
  const SvrSpec& spec_;
  const Matrix& x_;
  Vector sq_norm_;
  std::size_t capacity_;
  std::unordered_map<std::size_t, std::vector<double>> rows_;
  std::deque<std::size_t> order_;
};

}  // namespace

SvrSolution solve_svr(const SvrSpec& spec, const Matrix& x, const Vector& y) {
  const auto l = static_cast<std::size_t>(x.rows());
  if (l < 1 || static_cast<std::size_t>(y.size()) != l) {
    fail(ErrorKind::Data, "svr needs matching feature rows and targets");
  }
  const std::size_t big = 2 * l;
  const double c = spec.c;
  std::vector<double> alpha(big, 0.0);
  std::vector<double> grad(big);
  std::vector<signed char> sign(big);
  std::vector<double> qd(big);
  KernelCache cache(spec, x);
  for (std::size_t t = 0; t < l; ++t) {
    const double yt = y[static_cast<Eigen::Index>(t)];
    sign[t] = 1;
    sign[t + l] = -1;
    grad[t] = spec.epsilon - yt;
    grad[t + l] = spec.epsilon + yt;
    const double k = kernel(spec, x.row(static_cast<Eigen::Index>(t)).data(),
                            x.row(static_cast<Eigen::Index>(t)).data(), x.cols());
    qd[t] = k;
    qd[t + l] = k;
  }
  auto is_upper = [&](std::size_t t) { return alpha[t] >= c; };
  auto is_lower = [&](std::size_t t) { return alpha[t] <= 0.0; };
  // Q(i, t) = s_i s_t K(i mod l, t mod l)
  auto q = [&](std::size_t i, const std::vector<double>& krow, std::size_t t) {
    return static_cast<double>(sign[i] * sign[t]) * krow[t % l];
  };

  SvrSolution sol;
  while (sol.iterations < spec.max_iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t gi = -1;
    std::ptrdiff_t gj = -1;
    double obj_min = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < big; ++t) {
      if (sign[t] == 1) {
        if (!is_upper(t) && -grad[t] >= gmax) {
          gmax = -grad[t];
          gi = static_cast<std::ptrdiff_t>(t);
        }
      } else if (!is_lower(t) && grad[t] >= gmax) {
        gmax = grad[t];
        gi = static_cast<std::ptrdiff_t>(t);
      }
    }
    if (gi < 0) {
      sol.converged = true;
      break;
    }
    const auto i = static_cast<std::size_t>(gi);
    const std::vector<double> ki = cache.row(i % l);
    for (std::size_t t = 0; t < big; ++t) {
      if (sign[t] == 1) {
        if (is_lower(t)) continue;
        const double diff = gmax + grad[t];
        gmax2 = std::max(gmax2, grad[t]);
        if (diff > 0.0) {
          const double quad = qd[i] + qd[t] - 2.0 * sign[i] * q(i, ki, t);
          const double obj = -(diff * diff) / (quad > 0.0 ? quad : kTau);
          if (obj <= obj_min) {
            obj_min = obj;
            gj = static_cast<std::ptrdiff_t>(t);
          }
        }
      } else {
        if (is_upper(t)) continue;
        const double diff = gmax - grad[t];
        gmax2 = std::max(gmax2, -grad[t]);
        if (diff > 0.0) {
          const double quad = qd[i] + qd[t] + 2.0 * sign[i] * q(i, ki, t);
          const double obj = -(diff * diff) / (quad > 0.0 ? quad : kTau);
          if (obj <= obj_min) {
            obj_min = obj;
            gj = static_cast<std::ptrdiff_t>(t);
          }
        }
      }
    }
    if (gmax + gmax2 < spec.tol || gj < 0) {
      sol.converged = true;
      break;
    }
    ++sol.iterations;
    const auto j = static_cast<std::size_t>(gj);
    const std::vector<double>& kj = cache.row(j % l);
    const double old_ai = alpha[i];
    const double old_aj = alpha[j];
    const double qij = q(i, ki, j);
    if (sign[i] != sign[j]) {
      double quad = qd[i] + qd[j] + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = qd[i] + qd[j] - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < big; ++t) grad[t] += q(i, ki, t) * dai + q(j, kj, t) * daj;
  }

  // Bias from free variables, else the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < big; ++t) {
    const double yg = sign[t] * grad[t];
    if (is_upper(t)) {
      if (sign[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (is_lower(t)) {
      if (sign[t] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
  for (std::size_t t = 0; t < big; ++t) {
    if (!is_upper(t) && !is_lower(t)) {
      sol.kkt_residual = std::max(sol.kkt_residual, std::abs(sign[t] * grad[t] - rho));
    }
  }
  sol.bias = -rho;
  sol.alpha.assign(alpha.begin(), alpha.begin() + static_cast<std::ptrdiff_t>(l));
  sol.alpha_star.assign(alpha.begin() + static_cast<std::ptrdiff_t>(l), alpha.end());
  return sol;
}

SvrModel::SvrModel(SvrSpec spec, Matrix support, Vector coef, double bias)
    : spec_(spec), support_(std::move(support)), coef_(std::move(coef)), bias_(bias) {}

Vector SvrModel::predict(const Matrix& x) const {
  if (support_.rows() > 0 && x.cols() != support_.cols()) {
    fail(ErrorKind::Dimension, "svr query width does not match training width");
  }
  Vector out(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Eigen::RowVectorXd q = x.row(r);
    double acc = bias_;
    for (Eigen::Index s = 0; s < support_.rows(); ++s) {
      acc += coef_[s] * kernel(spec_, support_.row(s).data(), q.data(), x.cols());
    }
    out[r] = acc;
  }
  return out;
}

void SvrModel::save(BinaryWriter& out) const {
  out.matrix(support_);
  out.vector(coef_);
  out.f64(bias_);
}

std::unique_ptr<SvrModel> SvrModel::load(const SvrSpec& spec, BinaryReader& in) {
  Matrix support = in.matrix();
  Vector coef = in.vector();
  const double bias = in.f64();
  if (coef.size() != support.rows()) fail(ErrorKind::Integrity, "svr container rows mismatch");
  return std::make_unique<SvrModel>(spec, std::move(support), std::move(coef), bias);
}

}  // namespace cocoa::detail
