#pragma once

// Stochastic gradient boosting with squared-error loss: stage 0 is the mean
// target, every later stage fits a regression tree to the current residuals on
// a row subsample drawn without replacement.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "tripgrav/tree.hpp"

namespace tripgrav {

struct BoostConfig {
  std::size_t n_estimators = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  double subsample = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw Error("ml_models", ErrorKind::validation, "learning_rate must be > 0");
    if (!(subsample > 0.0 && subsample <= 1.0))
      throw Error("ml_models", ErrorKind::validation, "subsample must lie in (0,1]");
    if (min_samples_leaf < 1) throw Error("ml_models", ErrorKind::validation, "min_samples_leaf must be >= 1");
    if (min_samples_split < 2) throw Error("ml_models", ErrorKind::validation, "min_samples_split must be >= 2");
  }
};

class BoostedTrees {
 public:
  BoostedTrees() = default;
  BoostedTrees(BoostConfig config, double base, std::vector<RegressionTree> trees, std::size_t width,
               std::vector<double> train_mse)
      : config_(config), base_(base), trees_(std::move(trees)), width_(width), train_mse_(std::move(train_mse)) {}

  std::size_t input_width() const noexcept { return width_; }
  const BoostConfig& config() const noexcept { return config_; }
  double base() const noexcept { return base_; }
  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }
  /// Training MSE after stage 0, 1, ..., n_estimators.
  const std::vector<double>& train_mse() const noexcept { return train_mse_; }

  double predict_row(std::span<const double> x) const {
    double f = base_;
    for (const auto& t : trees_) f += config_.learning_rate * t.predict_row(x);
    return f;
  }

  std::vector<double> predict(const FeatureMatrix& m) const {
    check_width(m);
    std::vector<double> out(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) out[r] = predict_row(m.row(r));
    return out;
  }

  /// staged[s][r] = prediction for row r using the first s trees.
  std::vector<std::vector<double>> staged_predict(const FeatureMatrix& m) const {
    check_width(m);
    std::vector<std::vector<double>> staged;
    staged.reserve(trees_.size() + 1);
    staged.emplace_back(m.rows, base_);
    for (const auto& t : trees_) {
      auto next = staged.back();
      for (std::size_t r = 0; r < m.rows; ++r) next[r] += config_.learning_rate * t.predict_row(m.row(r));
      staged.push_back(std::move(next));
    }
    return staged;
  }

 private:
  void check_width(const FeatureMatrix& m) const {
    if (m.cols != width_)
      throw Error("ml_models", ErrorKind::schema,
                  "row width " + std::to_string(m.cols) + " does not match trained width " + std::to_string(width_));
  }

  BoostConfig config_;
  double base_ = 0.0;
  std::vector<RegressionTree> trees_;
  std::size_t width_ = 0;
  std::vector<double> train_mse_;
};

inline BoostedTrees gbr_fit(const FeatureMatrix& x, std::span<const double> y, const BoostConfig& config) {
  config.validate();
  const std::size_t n = x.rows;
  if (n == 0 || y.size() != n) throw Error("ml_models", ErrorKind::validation, "gbr_fit needs a nonempty training set");

  const double base = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  std::vector<double> fitted(n, base);
  std::vector<double> residual(n);
  auto mse = [&] {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += (y[r] - fitted[r]) * (y[r] - fitted[r]);
    return s / static_cast<double>(n);
  };
  std::vector<double> train_mse{mse()};
  std::vector<RegressionTree> trees;
  trees.reserve(config.n_estimators);
  if (config.n_estimators == 0) return BoostedTrees(config, base, {}, x.cols, std::move(train_mse));

  const auto sorted = presort(x);
  const TreeParams params{config.max_depth, config.min_samples_split, config.min_samples_leaf, 0};
  const auto n_sub = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(config.subsample * static_cast<double>(n))));
  std::vector<double> weights;
  std::vector<std::size_t> pool(n);

  for (std::size_t stage = 0; stage < config.n_estimators; ++stage) {
    Rng rng(derive_seed(config.seed, 0xB0057, stage));
    weights.clear();
    if (n_sub < n) {
      weights.assign(n, 0.0);
      std::iota(pool.begin(), pool.end(), std::size_t{0});
      for (std::size_t i = 0; i < n_sub; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(pool[i], pool[j]);
        weights[pool[i]] = 1.0;
      }
    }
    for (std::size_t r = 0; r < n; ++r) residual[r] = y[r] - fitted[r];
    trees.push_back(fit_tree(sorted, residual, weights, params, rng));
    for (std::size_t r = 0; r < n; ++r)
      fitted[r] += config.learning_rate * trees.back().predict_row(x.row(r));
    train_mse.push_back(mse());
  }
  return BoostedTrees(config, base, std::move(trees), x.cols, std::move(train_mse));
}

}  // namespace tripgrav
