#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tripgrav/parallel.hpp"
#include "tripgrav/tree.hpp"

namespace tripgrav {

/// Columns examined per split: every column, floor(sqrt(width)), a fixed
/// count, or a fraction of the width (rounded down, at least 1).
struct MaxFeatures {
  enum class Kind { all, sqrt, count, fraction };
  Kind kind = Kind::all;
  double value = 0.0;

  std::size_t resolve(std::size_t width) const {
    std::size_t k = width;
    switch (kind) {
      case Kind::all: k = width; break;
      case Kind::sqrt: k = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(width)))); break;
      case Kind::count: k = static_cast<std::size_t>(value); break;
      case Kind::fraction: k = static_cast<std::size_t>(std::floor(value * static_cast<double>(width))); break;
    }
    return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(1, width));
  }

  /// Search-space encoding: 0 = sqrt, (0,1] = fraction, > 1 = count.
  static MaxFeatures from_code(double code) {
    if (code == 0.0) return {Kind::sqrt, 0.0};
    if (code == 1.0) return {Kind::all, 0.0};
    if (code > 0.0 && code < 1.0) return {Kind::fraction, code};
    if (code > 1.0) return {Kind::count, std::floor(code)};
    throw Error("ml_models", ErrorKind::validation, "invalid max_features code");
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::all: return "all";
      case Kind::sqrt: return "sqrt";
      case Kind::count: return std::to_string(static_cast<long long>(value));
      case Kind::fraction: return std::to_string(value);
    }
    return "all";
  }
};

struct ForestConfig {
  std::size_t n_estimators = 100;
  int max_depth = -1;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  MaxFeatures max_features{};
  bool bootstrap = true;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_estimators < 1) throw Error("ml_models", ErrorKind::validation, "n_estimators must be >= 1");
    if (min_samples_leaf < 1) throw Error("ml_models", ErrorKind::validation, "min_samples_leaf must be >= 1");
    if (min_samples_split < 2) throw Error("ml_models", ErrorKind::validation, "min_samples_split must be >= 2");
  }
};

class RandomForest {
 public:
  RandomForest() = default;
  RandomForest(ForestConfig config, std::vector<RegressionTree> trees, std::size_t width)
      : config_(config), trees_(std::move(trees)), width_(width) {}

  std::size_t input_width() const noexcept { return width_; }
  const ForestConfig& config() const noexcept { return config_; }
  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }

  double predict_row(std::span<const double> x) const {
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.predict_row(x);
    return sum / static_cast<double>(trees_.size());
  }

  std::vector<double> predict(const FeatureMatrix& m) const {
    if (m.cols != width_)
      throw Error("ml_models", ErrorKind::schema,
                  "row width " + std::to_string(m.cols) + " does not match trained width " + std::to_string(width_));
    std::vector<double> out(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) out[r] = predict_row(m.row(r));
    return out;
  }

 private:
  ForestConfig config_;
  std::vector<RegressionTree> trees_;
  std::size_t width_ = 0;
};

/// Each tree draws its bootstrap sample and split columns from its own stream
/// derive_seed(seed, tree index), so `jobs` never changes the result.
inline RandomForest rf_fit(const FeatureMatrix& x, std::span<const double> y, const ForestConfig& config,
                           std::size_t jobs = 1) {
  config.validate();
  if (x.rows == 0 || y.size() != x.rows)
    throw Error("ml_models", ErrorKind::validation, "rf_fit needs a nonempty training set");
  const auto sorted = presort(x);
  TreeParams params{config.max_depth, config.min_samples_split, config.min_samples_leaf,
                    config.max_features.resolve(x.cols)};
  std::vector<RegressionTree> trees(config.n_estimators);
  parallel_for(config.n_estimators, jobs, [&](std::size_t t) {
    Rng rng(derive_seed(config.seed, 0xF0E57, t));
    std::vector<double> weights;
    if (config.bootstrap) {
      weights.assign(x.rows, 0.0);
      for (std::size_t i = 0; i < x.rows; ++i) weights[rng.below(x.rows)] += 1.0;
    }
    trees[t] = fit_tree(sorted, y, weights, params, rng);
  });
  return RandomForest(config, std::move(trees), x.cols);
}

}  // namespace tripgrav
