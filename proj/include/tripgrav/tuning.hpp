#pragma once

// Randomized hyperparameter search with k-fold cross-validation.
//
// Reproducibility rules:
//  * fold assignment comes from derive_seed(seed, kFoldStream) and is shared
//    by every trial of a search;
//  * trial t samples its point from derive_seed(seed, kTrialStream, t), so a
//    search with n_iter = M is a prefix of the same-seed search with N > M;
//  * the model fitted on fold f uses derive_seed(seed, kFitStream, f) for all
//    trials, so configurations are compared under common random numbers.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tripgrav/metrics.hpp"
#include "tripgrav/model.hpp"
#include "tripgrav/parallel.hpp"

namespace tripgrav {

using ParamPoint = std::map<std::string, double>;

struct Dimension {
  enum class Kind { discrete, linear, log };

  std::string name;
  Kind kind = Kind::discrete;
  std::vector<double> values;  // discrete
  double low = 0.0;            // continuous
  double high = 0.0;

  static Dimension discrete(std::string name, std::vector<double> values) {
    return {std::move(name), Kind::discrete, std::move(values), 0.0, 0.0};
  }
  static Dimension linear(std::string name, double low, double high) {
    return {std::move(name), Kind::linear, {}, low, high};
  }
  static Dimension log_uniform(std::string name, double low, double high) {
    return {std::move(name), Kind::log, {}, low, high};
  }

  double sample(Rng& rng) const {
    switch (kind) {
      case Kind::discrete: return values[rng.below(values.size())];
      case Kind::linear: return low + (high - low) * rng.uniform01();
      case Kind::log: return std::exp(std::log(low) + (std::log(high) - std::log(low)) * rng.uniform01());
    }
    return low;
  }
};

struct ParamSpace {
  std::vector<Dimension> dims;

  void validate() const {
    if (dims.empty()) throw Error("tuning", ErrorKind::validation, "parameter space is empty");
    for (const auto& d : dims) {
      if (d.kind == Dimension::Kind::discrete && d.values.empty())
        throw Error("tuning", ErrorKind::validation, "dimension '" + d.name + "' has no values");
      if (d.kind != Dimension::Kind::discrete && !(d.low < d.high))
        throw Error("tuning", ErrorKind::validation, "dimension '" + d.name + "' needs low < high");
      if (d.kind == Dimension::Kind::log && !(d.low > 0.0))
        throw Error("tuning", ErrorKind::validation, "log dimension '" + d.name + "' needs low > 0");
    }
  }

  ParamPoint sample(Rng& rng) const {
    ParamPoint p;
    for (const auto& d : dims) p[d.name] = d.sample(rng);
    return p;
  }

  /// Cartesian product of an all-discrete space, first dimension slowest.
  std::vector<ParamPoint> enumerate() const {
    validate();
    std::vector<ParamPoint> out{ParamPoint{}};
    for (const auto& d : dims) {
      if (d.kind != Dimension::Kind::discrete)
        throw Error("tuning", ErrorKind::validation, "exhaustive mode needs discrete dimensions ('" + d.name + "')");
      std::vector<ParamPoint> next;
      for (const auto& partial : out)
        for (double v : d.values) {
          auto p = partial;
          p[d.name] = v;
          next.push_back(std::move(p));
        }
      out = std::move(next);
    }
    return out;
  }
};

/// Shuffled partition of 0..n-1 into k folds whose sizes differ by at most 1
/// (the first n mod k folds get the extra element).
inline std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error("tuning", ErrorKind::validation, "k must be >= 2");
  if (k > n) throw Error("tuning", ErrorKind::validation, "k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(std::span(order), rng);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                    order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return folds;
}

/// Base configurations that sampled parameters override.
struct FamilyDefaults {
  ForestConfig rf{};
  BoostConfig gbr{};
  MlpConfig mlp{};
};

/// Fixed configurations for untuned fits: boosting with subsample 0.9, 500
/// estimators, learning rate 0.05, depth 5, split 2, leaf 2; the MLP defaults
/// of MlpConfig; the forest uses its library defaults.
inline FamilyDefaults tuned_defaults() {
  FamilyDefaults d;
  d.gbr.n_estimators = 500;
  d.gbr.learning_rate = 0.05;
  d.gbr.max_depth = 5;
  d.gbr.min_samples_split = 2;
  d.gbr.min_samples_leaf = 2;
  d.gbr.subsample = 0.9;
  return d;
}

namespace detail {
inline std::size_t as_count(double v, const std::string& name) {
  if (!(v >= 0.0) || v != std::floor(v))
    throw Error("tuning", ErrorKind::validation, "parameter '" + name + "' must be a nonnegative integer");
  return static_cast<std::size_t>(v);
}
}  // namespace detail

/// max_depth 0 means unlimited; max_features uses MaxFeatures::from_code.
inline ForestConfig apply_params(ForestConfig c, const ParamPoint& p) {
  for (const auto& [name, v] : p) {
    if (name == "n_estimators") c.n_estimators = detail::as_count(v, name);
    else if (name == "max_depth") c.max_depth = v <= 0.0 ? -1 : static_cast<int>(detail::as_count(v, name));
    else if (name == "min_samples_split") c.min_samples_split = detail::as_count(v, name);
    else if (name == "min_samples_leaf") c.min_samples_leaf = detail::as_count(v, name);
    else if (name == "max_features") c.max_features = MaxFeatures::from_code(v);
    else if (name == "bootstrap") c.bootstrap = v != 0.0;
    else throw Error("tuning", ErrorKind::validation, "unknown random-forest parameter '" + name + "'");
  }
  return c;
}

inline BoostConfig apply_params(BoostConfig c, const ParamPoint& p) {
  for (const auto& [name, v] : p) {
    if (name == "n_estimators") c.n_estimators = detail::as_count(v, name);
    else if (name == "learning_rate") c.learning_rate = v;
    else if (name == "max_depth") c.max_depth = v <= 0.0 ? -1 : static_cast<int>(detail::as_count(v, name));
    else if (name == "min_samples_split") c.min_samples_split = detail::as_count(v, name);
    else if (name == "min_samples_leaf") c.min_samples_leaf = detail::as_count(v, name);
    else if (name == "subsample") c.subsample = v;
    else throw Error("tuning", ErrorKind::validation, "unknown boosting parameter '" + name + "'");
  }
  return c;
}

inline MlpConfig apply_params(MlpConfig c, const ParamPoint& p) {
  for (const auto& [name, v] : p) {
    if (name == "learning_rate") c.learning_rate = v;
    else if (name == "dropout_rate") c.dropout_rate = v;
    else if (name == "batch_size") c.batch_size = detail::as_count(v, name);
    else if (name == "epochs") c.epochs = detail::as_count(v, name);
    else throw Error("tuning", ErrorKind::validation, "unknown MLP parameter '" + name + "'");
  }
  return c;
}

/// Fits one learner of `fam` with `params` applied over `defaults`.
inline FittedModel fit_family(ModelFamily fam, const FeatureMatrix& x, std::span<const double> y,
                              const ParamPoint& params, const FamilyDefaults& defaults, std::uint64_t seed,
                              std::size_t jobs = 1) {
  switch (fam) {
    case ModelFamily::rf: {
      auto c = apply_params(defaults.rf, params);
      c.seed = seed;
      return rf_fit(x, y, c, jobs);
    }
    case ModelFamily::gbr: {
      auto c = apply_params(defaults.gbr, params);
      c.seed = seed;
      return gbr_fit(x, y, c);
    }
    case ModelFamily::mlp: {
      auto c = apply_params(defaults.mlp, params);
      c.seed = seed;
      return mlp_fit(x, y, c);
    }
    case ModelFamily::gravity: break;
  }
  throw Error("tuning", ErrorKind::unsupported, "the gravity model has no tunable hyperparameters");
}

struct Trial {
  ParamPoint params;
  std::vector<double> fold_mae;
  double mean_mae = 0.0;  // +infinity when a fold diverged
};

struct SearchReport {
  ModelFamily family = ModelFamily::rf;
  std::size_t n_iter = 0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  bool exhaustive = false;
  std::vector<Trial> trials;
  std::size_t best_index = 0;
  ParamPoint best_params;
  double best_score = std::numeric_limits<double>::infinity();
};

enum class SearchMode { random, exhaustive };

struct SearchOptions {
  std::size_t n_iter = 20;
  std::size_t k = 5;
  std::uint64_t seed = 0;
  SearchMode mode = SearchMode::random;
  std::size_t jobs = 1;
  FamilyDefaults defaults{};
};

inline constexpr std::uint64_t kFoldStream = 0xF01D;
inline constexpr std::uint64_t kTrialStream = 0x7A1;
inline constexpr std::uint64_t kFitStream = 0xF17;

inline std::vector<ParamPoint> search_points(const ParamSpace& space, const SearchOptions& opt) {
  space.validate();
  if (opt.n_iter < 1) throw Error("tuning", ErrorKind::validation, "n_iter must be >= 1");
  if (opt.mode == SearchMode::exhaustive) {
    auto all = space.enumerate();
    if (all.size() != opt.n_iter)
      throw Error("tuning", ErrorKind::validation,
                  "exhaustive mode needs n_iter = " + std::to_string(all.size()) + " (the space size)");
    return all;
  }
  std::vector<ParamPoint> points;
  points.reserve(opt.n_iter);
  for (std::size_t t = 0; t < opt.n_iter; ++t) {
    Rng rng(derive_seed(opt.seed, kTrialStream, t));
    points.push_back(space.sample(rng));
  }
  return points;
}

/// Builds the (train, held-out) matrices of fold f.
inline std::pair<std::pair<FeatureMatrix, std::vector<double>>, std::pair<FeatureMatrix, std::vector<double>>>
fold_split(const FeatureMatrix& x, std::span<const double> y, const std::vector<std::vector<std::size_t>>& folds,
           std::size_t f) {
  std::vector<char> held(x.rows, 0);
  for (auto i : folds[f]) held[i] = 1;
  const std::size_t n_held = folds[f].size();
  FeatureMatrix xt(x.rows - n_held, x.cols), xv(n_held, x.cols);
  std::vector<double> yt, yv;
  yt.reserve(x.rows - n_held);
  yv.reserve(n_held);
  std::size_t it = 0, iv = 0;
  for (std::size_t r = 0; r < x.rows; ++r) {
    auto src = x.row(r);
    if (held[r]) {
      std::copy(src.begin(), src.end(), xv.row(iv++).begin());
      yv.push_back(y[r]);
    } else {
      std::copy(src.begin(), src.end(), xt.row(it++).begin());
      yt.push_back(y[r]);
    }
  }
  return {{std::move(xt), std::move(yt)}, {std::move(xv), std::move(yv)}};
}

inline SearchReport random_search(ModelFamily fam, const ParamSpace& space, const FeatureMatrix& x,
                                  std::span<const double> y, const SearchOptions& opt) {
  if (y.size() != x.rows) throw Error("tuning", ErrorKind::validation, "target length mismatch");
  const auto points = search_points(space, opt);
  const auto folds = kfold_indices(x.rows, opt.k, derive_seed(opt.seed, kFoldStream));

  SearchReport rep;
  rep.family = fam;
  rep.n_iter = points.size();
  rep.k = opt.k;
  rep.seed = opt.seed;
  rep.exhaustive = opt.mode == SearchMode::exhaustive;
  rep.trials.resize(points.size());

  parallel_for(points.size(), opt.jobs, [&](std::size_t t) {
    Trial trial;
    trial.params = points[t];
    for (std::size_t f = 0; f < opt.k; ++f) {
      const auto [train, held] = fold_split(x, y, folds, f);
      double score = std::numeric_limits<double>::infinity();
      try {
        const auto model = fit_family(fam, train.first, train.second, points[t], opt.defaults,
                                      derive_seed(opt.seed, kFitStream, f));
        score = mae(held.second, predict(model, held.first));
        if (!std::isfinite(score)) score = std::numeric_limits<double>::infinity();
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::training) throw;
      }
      trial.fold_mae.push_back(score);
    }
    trial.mean_mae = std::accumulate(trial.fold_mae.begin(), trial.fold_mae.end(), 0.0) /
                     static_cast<double>(trial.fold_mae.size());
    rep.trials[t] = std::move(trial);
  });

  for (std::size_t t = 0; t < rep.trials.size(); ++t) {
    if (rep.trials[t].mean_mae < rep.best_score) {
      rep.best_score = rep.trials[t].mean_mae;
      rep.best_index = t;
    }
  }
  rep.best_params = rep.trials[rep.best_index].params;
  return rep;
}

struct SearchPreset {
  ParamSpace space;
  std::size_t n_iter = 0;
  std::size_t k = 0;
};

/// Random forest: 20 trials, 5 folds.
inline SearchPreset rf_preset() {
  return {{{Dimension::discrete("n_estimators", {50, 100, 200, 300}),
            Dimension::discrete("max_depth", {0, 10, 20, 30}),
            Dimension::discrete("min_samples_split", {2, 5, 10}),
            Dimension::discrete("min_samples_leaf", {1, 2, 4}),
            Dimension::discrete("max_features", {0, 0.33, 0.5, 1.0})}},
          20,
          5};
}

/// Gradient boosting: 10 trials, 2 folds; the grid contains the configuration
/// subsample 0.9, 500 estimators, learning rate 0.05, depth 5, split 2, leaf 2.
inline SearchPreset gbr_preset() {
  return {{{Dimension::discrete("n_estimators", {100, 200, 300, 500}),
            Dimension::discrete("learning_rate", {0.01, 0.05, 0.1, 0.2}),
            Dimension::discrete("max_depth", {3, 4, 5, 6}),
            Dimension::discrete("min_samples_split", {2, 5, 10}),
            Dimension::discrete("min_samples_leaf", {1, 2, 4}),
            Dimension::discrete("subsample", {0.7, 0.8, 0.9, 1.0})}},
          10,
          2};
}

/// MLP: log-uniform learning rate in [1e-5, 1e-3], dropout in [0.1, 0.5],
/// batch size in {16, 32, 64}.
inline SearchPreset mlp_preset() {
  return {{{Dimension::log_uniform("learning_rate", 1e-5, 1e-3), Dimension::linear("dropout_rate", 0.1, 0.5),
            Dimension::discrete("batch_size", {16, 32, 64})}},
          10,
          3};
}

inline SearchPreset preset_for(ModelFamily fam) {
  switch (fam) {
    case ModelFamily::rf: return rf_preset();
    case ModelFamily::gbr: return gbr_preset();
    case ModelFamily::mlp: return mlp_preset();
    case ModelFamily::gravity: break;
  }
  throw Error("tuning", ErrorKind::unsupported, "no search preset for the gravity model");
}

}  // namespace tripgrav
