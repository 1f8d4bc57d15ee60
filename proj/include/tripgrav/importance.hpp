#pragma once

// Feature rankings: model-agnostic permutation importance and the split-gain
// (impurity) importance of tree ensembles.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tripgrav/metrics.hpp"
#include "tripgrav/model.hpp"
#include "tripgrav/parallel.hpp"

namespace tripgrav {

struct FeatureImportance {
  std::size_t index = 0;
  std::string label;
  double importance = 0.0;
};

/// Descending importance, ties by column index.
inline void rank_importances(std::vector<FeatureImportance>& v) {
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    if (a.importance != b.importance) return a.importance > b.importance;
    return a.index < b.index;
  });
}

/// importance(f) = mean over repeats of MAE(column f permuted) - MAE(baseline).
/// Repeat r of column f shuffles with stream derive_seed(seed, f, r).
inline std::vector<FeatureImportance> permutation_importance(const FittedModel& model, const FeatureMatrix& x,
                                                             std::span<const double> y, DatasetVariant variant,
                                                             std::size_t n_repeats, std::uint64_t seed,
                                                             std::size_t jobs = 1) {
  if (x.rows < 2) throw Error("importance", ErrorKind::validation, "permutation importance needs >= 2 rows");
  if (y.size() != x.rows) throw Error("importance", ErrorKind::validation, "target length mismatch");
  if (n_repeats < 1) throw Error("importance", ErrorKind::validation, "n_repeats must be >= 1");
  const double baseline = mae(y, predict(model, x));
  std::vector<FeatureImportance> out(x.cols);
  parallel_for(x.cols, jobs, [&](std::size_t f) {
    FeatureMatrix shuffled = x;
    std::vector<double> column(x.rows);
    double total = 0.0;
    for (std::size_t rep = 0; rep < n_repeats; ++rep) {
      for (std::size_t r = 0; r < x.rows; ++r) column[r] = x(r, f);
      Rng rng(derive_seed(seed, f, rep));
      shuffle(std::span(column), rng);
      for (std::size_t r = 0; r < x.rows; ++r) shuffled(r, f) = column[r];
      total += mae(y, predict(model, shuffled)) - baseline;
    }
    out[f] = {f, feature_label(variant, f), total / static_cast<double>(n_repeats)};
  });
  rank_importances(out);
  return out;
}

inline std::vector<FeatureImportance> permutation_importance(const FittedModel& model, const Dataset& ds,
                                                             std::size_t n_repeats, std::uint64_t seed,
                                                             std::size_t jobs = 1) {
  const auto y = targets(ds.records);
  return permutation_importance(model, to_matrix(ds.records), y, ds.variant, n_repeats, seed, jobs);
}

/// Total squared-error reduction per column over all splits, normalised to
/// sum to 1. A model whose trees never split yields all zeros.
inline std::vector<FeatureImportance> impurity_importance(const FittedModel& model, DatasetVariant variant) {
  const std::vector<RegressionTree>* trees = nullptr;
  if (const auto* rf = std::get_if<RandomForest>(&model)) trees = &rf->trees();
  if (const auto* gb = std::get_if<BoostedTrees>(&model)) trees = &gb->trees();
  if (!trees)
    throw Error("importance", ErrorKind::unsupported,
                "impurity importance needs a tree model, got " + std::string(to_string(family(model))));
  const std::size_t width = input_width(model);
  std::vector<double> gains(width, 0.0);
  for (const auto& t : *trees) t.accumulate_gains(gains);
  const double total = std::accumulate(gains.begin(), gains.end(), 0.0);
  std::vector<FeatureImportance> out(width);
  for (std::size_t f = 0; f < width; ++f)
    out[f] = {f, feature_label(variant, f), total > 0.0 ? gains[f] / total : 0.0};
  rank_importances(out);
  return out;
}

inline std::vector<FeatureImportance> top_k(std::span<const FeatureImportance> ranking, std::size_t k) {
  if (k > ranking.size())
    throw Error("importance", ErrorKind::validation, "k exceeds the number of features");
  std::vector<FeatureImportance> sorted(ranking.begin(), ranking.end());
  rank_importances(sorted);
  sorted.resize(k);
  return sorted;
}

}  // namespace tripgrav
