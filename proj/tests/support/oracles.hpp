#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline double sam(const std::vector<double>& a, const std::vector<double>& b) {
  long double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<long double>(a[i]) * b[i];
    na += static_cast<long double>(a[i]) * a[i];
    nb += static_cast<long double>(b[i]) * b[i];
  }
  long double c = dot / std::sqrt(na * nb);
  c = std::clamp(c, -1.0L, 1.0L);
  return static_cast<double>(std::acos(c));
}

inline std::vector<bool> threshold(const std::vector<double>& d, double tau) {
  std::vector<bool> keep(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) keep[i] = d[i] >= tau;
  return keep;
}

// Repeatedly picks the largest remaining distance; ties go to the smaller
// scan index, then to the earlier position.
inline std::vector<bool> top_n(const std::vector<double>& d, const std::vector<std::int64_t>& idx,
                               std::size_t n) {
  std::vector<bool> keep(d.size(), false);
  for (std::size_t round = 0; round < std::min(n, d.size()); ++round) {
    std::size_t best = d.size();
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (keep[i]) continue;
      if (best == d.size() || d[i] > d[best] || (d[i] == d[best] && idx[i] < idx[best])) best = i;
    }
    keep[best] = true;
  }
  return keep;
}

// Cyclic Jacobi rotations on a symmetric matrix; eigenpairs sorted descending.
struct EigenPairs {
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;  // one per value
};

inline EigenPairs jacobi(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a[i][i] > a[j][j]; });
  EigenPairs out;
  for (std::size_t i : order) {
    out.values.push_back(a[i][i]);
    std::vector<double> col(n);
    for (std::size_t k = 0; k < n; ++k) col[k] = v[k][i];
    out.vectors.push_back(std::move(col));
  }
  return out;
}

// Sample covariance with the n-1 denominator.
template <class M>
std::vector<std::vector<double>> covariance(const M& x) {
  const auto rows = static_cast<std::size_t>(x.rows());
  const auto cols = static_cast<std::size_t>(x.cols());
  std::vector<double> mean(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) mean[j] += x(i, j) / static_cast<double>(rows);
  std::vector<std::vector<double>> c(cols, std::vector<double>(cols, 0.0));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t p = 0; p < cols; ++p)
      for (std::size_t q = 0; q < cols; ++q)
        c[p][q] += (x(i, p) - mean[p]) * (x(i, q) - mean[q]) / static_cast<double>(rows - 1);
  return c;
}

// Ordinary least squares with an intercept: returns (weights..., intercept).
inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Eigen::MatrixXd a(x.rows(), x.cols() + 1);
  a << x, Eigen::VectorXd::Ones(x.rows());
  return (a.transpose() * a).ldlt().solve(a.transpose() * y);
}

// Variance of the mean of s draws without replacement from n values.
inline double finite_population_variance(double sigma2, double s, double n) {
  return sigma2 / s * (n - s) / (n - 1);
}

inline double relative_error(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / scale;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("cocoa-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace oracle
