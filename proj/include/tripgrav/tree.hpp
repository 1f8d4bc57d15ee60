#pragma once

// CART regression trees grown greedily on squared-error reduction.
//
// Split search uses one presorted index per column, scanned level by level:
// each pass over a column visits every active row once and updates the
// running split statistics of the node that row belongs to. Candidate
// thresholds are midpoints between consecutive distinct values within a node.
// Ties on gain go to the lowest column index, then the lowest threshold.
//
// Rows carry non-negative integer weights (bootstrap multiplicities, or 0/1
// subsample membership). Sample-count limits are applied to weight sums so a
// weighted fit equals a fit on the expanded resample.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "tripgrav/core.hpp"
#include "tripgrav/rng.hpp"

namespace tripgrav {

struct TreeParams {
  /// Maximum leaf depth; negative means unlimited.
  int max_depth = -1;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  /// Columns examined per split; 0 or >= width means all of them.
  std::size_t max_features = 0;
};

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;   // mean target of the training rows reaching the node
  double weight = 0.0;  // weighted row count
  double gain = 0.0;    // squared-error reduction of the split (0 for leaves)

  bool is_leaf() const noexcept { return feature < 0; }
};

class RegressionTree {
 public:
  RegressionTree() = default;
  RegressionTree(std::vector<TreeNode> nodes, std::size_t width) : nodes_(std::move(nodes)), width_(width) {}

  double predict_row(std::span<const double> x) const noexcept {
    std::size_t i = 0;
    while (!nodes_[i].is_leaf()) {
      const auto& n = nodes_[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes_[i].value;
  }

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t width() const noexcept { return width_; }

  int depth() const {
    std::vector<int> d(nodes_.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      deepest = std::max(deepest, d[i]);
      if (!nodes_[i].is_leaf()) {
        d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
        d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
      }
    }
    return deepest;
  }

  /// Adds each split's gain to the entry of the column it splits on.
  void accumulate_gains(std::span<double> per_feature) const {
    for (const auto& n : nodes_)
      if (!n.is_leaf()) per_feature[static_cast<std::size_t>(n.feature)] += n.gain;
  }

 private:
  std::vector<TreeNode> nodes_;
  std::size_t width_ = 0;
};

/// Column-major copy of a feature matrix with a per-column sort order.
/// Built once and shared by every tree fitted on the same rows.
struct SortedColumns {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;          // values[c * rows + r]
  std::vector<std::uint32_t> order;    // order[c * rows + k] = k-th smallest row of column c

  double at(std::size_t r, std::size_t c) const noexcept { return values[c * rows + r]; }
};

inline SortedColumns presort(const FeatureMatrix& m) {
  SortedColumns s;
  s.rows = m.rows;
  s.cols = m.cols;
  s.values.resize(m.rows * m.cols);
  s.order.resize(m.rows * m.cols);
  for (std::size_t c = 0; c < m.cols; ++c) {
    double* col = s.values.data() + c * m.rows;
    for (std::size_t r = 0; r < m.rows; ++r) col[r] = m(r, c);
    auto first = s.order.begin() + static_cast<std::ptrdiff_t>(c * m.rows);
    auto last = first + static_cast<std::ptrdiff_t>(m.rows);
    std::iota(first, last, std::uint32_t{0});
    std::stable_sort(first, last, [col](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
  }
  return s;
}

namespace detail {

struct FrontierNode {
  std::size_t node = 0;  // index into the node array
  int depth = 0;
  double weight = 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;
  bool splittable = false;
  // best split found in this level
  int best_feature = -1;
  double best_threshold = 0.0;
  double best_gain = 0.0;
};

struct ScanState {
  double weight = 0.0;
  double sum = 0.0;
  double last = 0.0;
};

inline double split_midpoint(double lo, double hi) noexcept {
  const double mid = lo + (hi - lo) * 0.5;
  return (mid >= hi) ? lo : mid;
}

}  // namespace detail

/// Fits one regression tree. `weights` may be empty (every row weight 1).
inline RegressionTree fit_tree(const SortedColumns& data, std::span<const double> y, std::span<const double> weights,
                               const TreeParams& params, Rng& rng) {
  const std::size_t n = data.rows;
  const std::size_t p = data.cols;
  if (n == 0 || y.size() != n) throw Error("ml_models", ErrorKind::validation, "fit_tree needs a nonempty training set");
  if (!weights.empty() && weights.size() != n)
    throw Error("ml_models", ErrorKind::validation, "weight vector length mismatch");
  auto w_of = [&](std::size_t r) { return weights.empty() ? 1.0 : weights[r]; };

  const std::size_t n_features = (params.max_features == 0 || params.max_features >= p) ? p : params.max_features;
  const double min_leaf = static_cast<double>(std::max<std::size_t>(1, params.min_samples_leaf));
  const double min_split = static_cast<double>(std::max<std::size_t>(2, params.min_samples_split));

  std::vector<TreeNode> nodes(1);
  std::vector<int> slot(n, -1);  // frontier slot of each row, -1 once settled
  std::vector<detail::FrontierNode> frontier(1);
  {
    auto& root = frontier[0];
    bool first = true;
    for (std::size_t r = 0; r < n; ++r) {
      const double w = w_of(r);
      if (w <= 0.0) continue;
      slot[r] = 0;
      root.weight += w;
      root.sum += w * y[r];
      root.sum_sq += w * y[r] * y[r];
      root.y_min = first ? y[r] : std::min(root.y_min, y[r]);
      root.y_max = first ? y[r] : std::max(root.y_max, y[r]);
      first = false;
    }
    if (root.weight <= 0.0) throw Error("ml_models", ErrorKind::validation, "fit_tree: all row weights are zero");
  }

  std::vector<std::size_t> feature_pool(p);
  std::vector<char> uses;  // uses[k * p + f]
  std::vector<detail::ScanState> scan;

  while (!frontier.empty()) {
    const std::size_t m = frontier.size();
    bool any_splittable = false;
    uses.assign(m * p, 0);
    for (std::size_t k = 0; k < m; ++k) {
      auto& fn = frontier[k];
      auto& node = nodes[fn.node];
      node.value = fn.sum / fn.weight;
      node.weight = fn.weight;
      fn.splittable = (params.max_depth < 0 || fn.depth < params.max_depth) && fn.weight >= min_split &&
                      fn.weight >= 2.0 * min_leaf && fn.y_max > fn.y_min;
      if (!fn.splittable) continue;
      any_splittable = true;
      if (n_features == p) {
        std::fill_n(uses.begin() + static_cast<std::ptrdiff_t>(k * p), p, char{1});
      } else {
        std::iota(feature_pool.begin(), feature_pool.end(), std::size_t{0});
        for (std::size_t i = 0; i < n_features; ++i) {
          const auto j = i + static_cast<std::size_t>(rng.below(p - i));
          std::swap(feature_pool[i], feature_pool[j]);
          uses[k * p + feature_pool[i]] = 1;
        }
      }
    }
    if (!any_splittable) break;

    for (std::size_t f = 0; f < p; ++f) {
      bool needed = false;
      for (std::size_t k = 0; k < m && !needed; ++k) needed = uses[k * p + f] != 0;
      if (!needed) continue;
      scan.assign(m, {});
      const double* col = data.values.data() + f * n;
      const std::uint32_t* ord = data.order.data() + f * n;
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t r = ord[i];
        const int k = slot[r];
        if (k < 0 || !uses[static_cast<std::size_t>(k) * p + f]) continue;
        auto& st = scan[static_cast<std::size_t>(k)];
        auto& fn = frontier[static_cast<std::size_t>(k)];
        const double v = col[r];
        if (st.weight > 0.0 && v > st.last) {
          const double wl = st.weight;
          const double wr = fn.weight - wl;
          if (wl >= min_leaf && wr >= min_leaf) {
            const double sr = fn.sum - st.sum;
            const double gain = st.sum * st.sum / wl + sr * sr / wr - fn.sum * fn.sum / fn.weight;
            if (gain > fn.best_gain) {
              fn.best_gain = gain;
              fn.best_feature = static_cast<int>(f);
              fn.best_threshold = detail::split_midpoint(st.last, v);
            }
          }
        }
        const double w = w_of(r);
        st.weight += w;
        st.sum += w * y[r];
        st.last = v;
      }
    }

    // Materialise the chosen splits and build the next frontier.
    std::vector<detail::FrontierNode> next;
    std::vector<int> child_slot(m * 2, -1);
    for (std::size_t k = 0; k < m; ++k) {
      auto& fn = frontier[k];
      const double node_sse = fn.sum_sq - fn.sum * fn.sum / fn.weight;
      const double min_gain = 1e-12 * std::max(std::abs(node_sse), std::numeric_limits<double>::min());
      if (!fn.splittable || fn.best_feature < 0 || !(fn.best_gain > min_gain)) continue;
      auto& node = nodes[fn.node];
      node.feature = fn.best_feature;
      node.threshold = fn.best_threshold;
      node.gain = fn.best_gain;
      node.left = static_cast<int>(nodes.size());
      node.right = node.left + 1;
      for (int side = 0; side < 2; ++side) {
        detail::FrontierNode child;
        child.node = static_cast<std::size_t>(node.left + side);
        child.depth = fn.depth + 1;
        child_slot[k * 2 + static_cast<std::size_t>(side)] = static_cast<int>(next.size());
        next.push_back(child);
      }
      nodes.resize(nodes.size() + 2);
    }
    std::vector<char> seen(next.size(), 0);
    for (std::size_t r = 0; r < n; ++r) {
      const int k = slot[r];
      if (k < 0) continue;
      const auto& fn = frontier[static_cast<std::size_t>(k)];
      const auto& node = nodes[fn.node];
      if (node.is_leaf()) {
        slot[r] = -1;
        continue;
      }
      const int side = data.at(r, static_cast<std::size_t>(node.feature)) <= node.threshold ? 0 : 1;
      const int c = child_slot[static_cast<std::size_t>(k) * 2 + static_cast<std::size_t>(side)];
      slot[r] = c;
      auto& child = next[static_cast<std::size_t>(c)];
      const double w = w_of(r);
      child.weight += w;
      child.sum += w * y[r];
      child.sum_sq += w * y[r] * y[r];
      if (!seen[static_cast<std::size_t>(c)]) {
        child.y_min = child.y_max = y[r];
        seen[static_cast<std::size_t>(c)] = 1;
      } else {
        child.y_min = std::min(child.y_min, y[r]);
        child.y_max = std::max(child.y_max, y[r]);
      }
    }
    frontier = std::move(next);
  }
  for (const auto& fn : frontier) {
    nodes[fn.node].value = fn.sum / fn.weight;
    nodes[fn.node].weight = fn.weight;
  }
  return RegressionTree(std::move(nodes), p);
}

/// Convenience overload that presorts the matrix itself.
inline RegressionTree fit_tree(const FeatureMatrix& x, std::span<const double> y, const TreeParams& params, Rng& rng) {
  if (x.rows == 0) throw Error("ml_models", ErrorKind::validation, "fit_tree needs a nonempty training set");
  return fit_tree(presort(x), y, {}, params, rng);
}

}  // namespace tripgrav
