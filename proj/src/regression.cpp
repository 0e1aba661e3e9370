#include "cocoa/regression.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "cocoa/detail/fitted.hpp"
#include "cocoa/rng.hpp"
#include "cocoa/text.hpp"

namespace cocoa {

namespace detail {

NetworkModel::NetworkModel(Network net, Vector mean, Vector scale)
    : net_(std::move(net)), mean_(std::move(mean)), scale_(std::move(scale)) {}

Vector NetworkModel::predict(const Matrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != net_.input_width()) {
    fail(ErrorKind::Dimension, "network query width does not match training width");
  }
  Matrix z = x;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    z.row(r) = (z.row(r) - mean_.transpose()).cwiseQuotient(scale_.transpose());
  }
  return net_.predict(z);
}

void NetworkModel::save(BinaryWriter& out) const {
  out.vector(mean_);
  out.vector(scale_);
  out.doubles(net_.flat_parameters());
}

std::unique_ptr<NetworkModel> NetworkModel::load(const NetworkSpec& spec, BinaryReader& in) {
  Vector mean = in.vector();
  Vector scale = in.vector();
  const std::vector<double> flat = in.doubles();
  if (mean.size() < 1 || scale.size() != mean.size()) {
    fail(ErrorKind::Integrity, "network container has inconsistent input scaling");
  }
  Network net(spec, static_cast<std::size_t>(mean.size()));
  if (flat.size() != net.parameter_count()) {
    fail(ErrorKind::Integrity, "network container parameter count does not match its spec");
  }
  net.set_flat_parameters(flat);
  return std::make_unique<NetworkModel>(std::move(net), std::move(mean), std::move(scale));
}

}  // namespace detail

namespace {

constexpr std::string_view kMagic = "COCOAMDL";
constexpr std::uint64_t kContainerVersion = 1;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_finite(const Matrix& x, const Vector& y) {
  if (!x.allFinite()) fail(ErrorKind::Data, "training features contain non-finite values");
  if (!y.allFinite()) fail(ErrorKind::Data, "training targets contain non-finite values");
}

double mean_squared(const Vector& a, const Vector& b) {
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

Matrix take_rows(const Matrix& x, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

Vector take(const Vector& y, const std::vector<std::size_t>& rows) {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(rows[i])];
  }
  return out;
}

}  // namespace

TrainedModel::TrainedModel(ModelSpec spec, Property property, RangeTag range, std::size_t width,
                           std::shared_ptr<const detail::FittedModel> impl,
                           std::vector<std::string> warnings)
    : spec_(std::move(spec)),
      property_(property),
      range_(range),
      width_(width),
      impl_(std::move(impl)),
      warnings_(std::move(warnings)) {}

Vector TrainedModel::predict(const Matrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != width_) {
    fail(ErrorKind::Dimension, "model expects " + std::to_string(width_) + " bands, got " +
                                   std::to_string(x.cols()));
  }
  return impl_->predict(x);
}

TrainedModel fit(const ModelSpec& spec, const Matrix& x, const Vector& y, Property property,
                 RangeTag range) {
  validate(spec);
  if (x.rows() != y.size()) fail(ErrorKind::Dimension, "feature rows and target count differ");
  if (x.rows() < 2) fail(ErrorKind::Data, "fit needs at least two training rows");
  if (x.cols() < 1) fail(ErrorKind::Dimension, "fit needs at least one band");
  require_finite(x, y);
  const auto width = static_cast<std::size_t>(x.cols());
  std::vector<std::string> warnings;

  std::shared_ptr<const detail::FittedModel> impl = std::visit(
      Overloaded{
          [&](const KnnSpec& s) -> std::shared_ptr<const detail::FittedModel> {
            return std::make_shared<detail::KnnModel>(s, x, y);
          },
          [&](const ForestSpec& s) -> std::shared_ptr<const detail::FittedModel> {
            return detail::ForestModel::fit(s, x, y);
          },
          [&](const SvrSpec& s) -> std::shared_ptr<const detail::FittedModel> {
            const detail::SvrSolution sol = detail::solve_svr(s, x, y);
            if (!sol.converged) {
              warnings.push_back("svr did not converge within " + std::to_string(s.max_iter) +
                                 " iterations");
            }
            std::vector<std::size_t> support;
            for (std::size_t i = 0; i < sol.alpha.size(); ++i) {
              if (sol.alpha[i] - sol.alpha_star[i] != 0.0) support.push_back(i);
            }
            Vector coef(static_cast<Eigen::Index>(support.size()));
            for (std::size_t i = 0; i < support.size(); ++i) {
              coef[static_cast<Eigen::Index>(i)] = sol.alpha[support[i]] - sol.alpha_star[support[i]];
            }
            return std::make_shared<detail::SvrModel>(s, take_rows(x, support), std::move(coef),
                                                      sol.bias);
          },
          [&](const NetworkSpec& s) -> std::shared_ptr<const detail::FittedModel> {
            Vector mean = Vector::Zero(x.cols());
            Vector scale = Vector::Ones(x.cols());
            if (s.standardize_inputs) {
              mean = x.colwise().mean().transpose();
              for (Eigen::Index c = 0; c < x.cols(); ++c) {
                const double var = (x.col(c).array() - mean[c]).square().sum() /
                                   static_cast<double>(x.rows());
                scale[c] = var > 1e-24 ? std::sqrt(var) : 1.0;
              }
            }
            Matrix z = x;
            for (Eigen::Index r = 0; r < z.rows(); ++r) {
              z.row(r) = (z.row(r) - mean.transpose()).cwiseQuotient(scale.transpose());
            }
            Network net(s, width);
            train_network(net, s, z, y);
            return std::make_shared<detail::NetworkModel>(std::move(net), std::move(mean),
                                                          std::move(scale));
          }},
      spec);
  return TrainedModel(spec, property, range, width, std::move(impl), std::move(warnings));
}

std::string encode_model(const TrainedModel& model, const TargetScaler& scaler) {
  detail::BinaryWriter out;
  for (char c : kMagic) out.pod(c);
  out.u64(kContainerVersion);
  out.str(to_json(model.spec()).dump());
  out.str(to_string(model.property()));
  out.str(to_string(model.range()));
  out.u64(model.width());
  for (Property p : kAllProperties) {
    out.f64(scaler.min(p));
    out.f64(scaler.max(p));
  }
  out.u64(model.warnings().size());
  for (const auto& w : model.warnings()) out.str(w);
  model.impl().save(out);
  return out.bytes();
}

LoadedModel decode_model(std::string_view bytes) {
  detail::BinaryReader in(bytes);
  for (char c : kMagic) {
    if (in.pod<char>() != c) fail(ErrorKind::Integrity, "not a cocoaspec model container");
  }
  const auto version = in.u64();
  if (version != kContainerVersion) {
    fail(ErrorKind::Integrity, "unsupported model container version " + std::to_string(version));
  }
  ModelSpec spec;
  try {
    spec = model_spec_from_json(nlohmann::json::parse(in.str()));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Integrity, std::string("model container spec is corrupt: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorKind::Integrity, std::string("model container spec is invalid: ") + e.what());
  }
  Property property;
  RangeTag range;
  try {
    property = parse_property(in.str());
    range = parse_range(in.str());
  } catch (const Error& e) {
    fail(ErrorKind::Integrity, std::string("model container header is invalid: ") + e.what());
  }
  const auto width = static_cast<std::size_t>(in.u64());
  std::array<double, 4> lo{};
  std::array<double, 4> hi{};
  for (std::size_t i = 0; i < 4; ++i) {
    lo[i] = in.f64();
    hi[i] = in.f64();
  }
  const auto n_warn = in.u64();
  if (n_warn > bytes.size()) fail(ErrorKind::Integrity, "model container is truncated or corrupt");
  std::vector<std::string> warnings;
  for (std::uint64_t i = 0; i < n_warn; ++i) warnings.push_back(in.str());

  std::shared_ptr<const detail::FittedModel> impl = std::visit(
      Overloaded{
          [&](const KnnSpec& s) -> std::shared_ptr<const detail::FittedModel> {
            return detail::KnnModel::load(s, in);
          },
          [&](const ForestSpec&) -> std::shared_ptr<const detail::FittedModel> {
            return detail::ForestModel::load(in);
          },
          [&](const SvrSpec& s) -> std::shared_ptr<const detail::FittedModel> {
            return detail::SvrModel::load(s, in);
          },
          [&](const NetworkSpec& s) -> std::shared_ptr<const detail::FittedModel> {
            return detail::NetworkModel::load(s, in);
          }},
      spec);
  if (!in.at_end()) fail(ErrorKind::Integrity, "model container has trailing bytes");
  TargetScaler scaler;
  try {
    scaler = TargetScaler(lo, hi);
  } catch (const Error& e) {
    fail(ErrorKind::Integrity, std::string("model container scaler is invalid: ") + e.what());
  }
  return {TrainedModel(std::move(spec), property, range, width, std::move(impl),
                       std::move(warnings)),
          scaler};
}

void save_model(const std::filesystem::path& path, const TrainedModel& model,
                const TargetScaler& scaler) {
  text::write_file(path, encode_model(model, scaler));
}

LoadedModel load_model(const std::filesystem::path& path) {
  return decode_model(text::read_file(path));
}

std::vector<std::vector<std::pair<std::string, double>>> enumerate_grid(
    const GridSearchConfig& cfg) {
  std::vector<std::vector<std::pair<std::string, double>>> points{{}};
  for (const auto& axis : cfg.grid) {
    std::vector<std::vector<std::pair<std::string, double>>> next;
    for (const auto& p : points) {
      for (double v : axis.values) {
        auto q = p;
        q.emplace_back(axis.name, v);
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  return points;
}

std::vector<std::size_t> fold_assignment(std::size_t rows, std::size_t folds, std::uint64_t seed) {
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  KeyedRng rng(seed, "cv-folds", rows);
  for (std::size_t i = rows; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<std::size_t> fold(rows);
  for (std::size_t i = 0; i < rows; ++i) fold[order[i]] = i % folds;
  return fold;
}

GridSearchResult grid_search_cv(const ModelSpec& base, const GridSearchConfig& cfg,
                                const Matrix& x, const Vector& y, std::uint64_t seed,
                                unsigned threads) {
  if (cfg.grid.empty()) fail(ErrorKind::Config, "grid search needs at least one axis");
  for (const auto& axis : cfg.grid) {
    if (axis.values.empty()) fail(ErrorKind::Config, "grid axis '" + axis.name + "' has no values");
  }
  if (cfg.folds < 2) fail(ErrorKind::Config, "cross-validation needs at least two folds");
  const auto points = enumerate_grid(cfg);
  std::vector<ModelSpec> specs;
  for (const auto& p : points) {
    ModelSpec s = base;
    for (const auto& [name, value] : p) apply_param(s, name, value);
    validate(s);
    specs.push_back(std::move(s));
  }

  GridSearchResult result;
  if (specs.size() == 1) {
    result.best = specs.front();
    result.table.push_back({points.front(), {}, std::nan("")});
    return result;
  }

  const auto rows = static_cast<std::size_t>(x.rows());
  if (cfg.folds > rows) {
    fail(ErrorKind::Fold, std::to_string(cfg.folds) + " folds requested for " +
                              std::to_string(rows) + " training rows");
  }
  const auto fold = fold_assignment(rows, cfg.folds, seed);
  std::vector<std::vector<std::size_t>> train_idx(cfg.folds);
  std::vector<std::vector<std::size_t>> valid_idx(cfg.folds);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t f = 0; f < cfg.folds; ++f) (fold[r] == f ? valid_idx : train_idx)[f].push_back(r);
  }
  for (std::size_t f = 0; f < cfg.folds; ++f) {
    if (train_idx[f].size() < 2 || valid_idx[f].empty()) {
      fail(ErrorKind::Fold, "fold " + std::to_string(f) + " has too few rows");
    }
  }

  const std::size_t tasks = specs.size() * cfg.folds;
  std::vector<double> scores(tasks);
  std::vector<std::exception_ptr> errors(tasks);
  auto run = [&](std::size_t t) {
    const std::size_t g = t / cfg.folds;
    const std::size_t f = t % cfg.folds;
    try {
      const TrainedModel m = fit(specs[g], take_rows(x, train_idx[f]), take(y, train_idx[f]));
      scores[t] = mean_squared(m.predict(take_rows(x, valid_idx[f])), take(y, valid_idx[f]));
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(tasks)));
  if (workers == 1) {
    for (std::size_t t = 0; t < tasks; ++t) run(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < tasks; t = next++) run(t);
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < specs.size(); ++g) {
    CvRow row{points[g], {}, 0.0};
    for (std::size_t f = 0; f < cfg.folds; ++f) row.fold_mse.push_back(scores[g * cfg.folds + f]);
    row.mean_mse = std::accumulate(row.fold_mse.begin(), row.fold_mse.end(), 0.0) /
                   static_cast<double>(cfg.folds);
    if (row.mean_mse < best) {
      best = row.mean_mse;
      result.best_index = g;
    }
    result.table.push_back(std::move(row));
  }
  result.best = specs[result.best_index];
  return result;
}

nlohmann::json to_json(const GridSearchConfig& cfg) {
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& a : cfg.grid) grid.push_back({{"name", a.name}, {"values", a.values}});
  return {{"grid", grid}, {"folds", cfg.folds}};
}

GridSearchConfig grid_config_from_json(const nlohmann::json& j) {
  GridSearchConfig cfg;
  try {
    if (j.contains("folds")) cfg.folds = j.at("folds").get<std::size_t>();
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      if (g.is_object()) {
        for (const auto& [name, values] : g.items()) {
          cfg.grid.push_back({name, values.get<std::vector<double>>()});
        }
      } else {
        for (const auto& a : g) {
          cfg.grid.push_back({a.at("name").get<std::string>(), a.at("values").get<std::vector<double>>()});
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, std::string("invalid grid search config: ") + e.what());
  }
  return cfg;
}

}  // namespace cocoa
