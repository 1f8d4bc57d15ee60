#pragma once

// Goodness-of-fit metrics: R^2, MAE and the common part of commuters (CPC,
// the Sorensen-Dice overlap of two flow maps).

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tripgrav/error.hpp"

namespace tripgrav {

namespace detail {
inline void require_same_length(std::span<const double> a, std::span<const double> b, std::size_t min_len) {
  if (a.size() != b.size())
    throw Error("metrics", ErrorKind::validation,
                "length mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  if (a.size() < min_len)
    throw Error("metrics", ErrorKind::validation, "need at least " + std::to_string(min_len) + " values");
}
}  // namespace detail

/// 1 - SS_res / SS_tot. May be negative.
inline double r_squared(std::span<const double> actual, std::span<const double> predicted) {
  detail::require_same_length(actual, predicted, 2);
  double mean = 0.0;
  for (double y : actual) mean += y;
  mean /= static_cast<double>(actual.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
  }
  if (ss_tot == 0.0) throw Error("metrics", ErrorKind::undefined_metric, "R^2 undefined: actual values are constant");
  return 1.0 - ss_res / ss_tot;
}

inline double mae(std::span<const double> actual, std::span<const double> predicted) {
  detail::require_same_length(actual, predicted, 1);
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) s += std::abs(actual[i] - predicted[i]);
  return s / static_cast<double>(actual.size());
}

/// CPC over two flow maps; a pair missing from one map counts as zero flow.
template <typename Key>
double cpc(const std::map<Key, double>& generated, const std::map<Key, double>& real) {
  double common = 0.0, total_g = 0.0, total_r = 0.0;
  for (const auto& [key, g] : generated) {
    if (g < 0.0) throw Error("metrics", ErrorKind::validation, "CPC requires nonnegative flows");
    total_g += g;
    if (auto it = real.find(key); it != real.end()) common += std::min(g, it->second);
  }
  for (const auto& [key, r] : real) {
    if (r < 0.0) throw Error("metrics", ErrorKind::validation, "CPC requires nonnegative flows");
    total_r += r;
  }
  if (total_g + total_r == 0.0)
    throw Error("metrics", ErrorKind::undefined_metric, "CPC undefined: both flow totals are zero");
  return 2.0 * common / (total_g + total_r);
}

/// CPC for index-aligned flow vectors (entry i of both refers to the same pair).
inline double cpc(std::span<const double> generated, std::span<const double> real) {
  detail::require_same_length(generated, real, 1);
  double common = 0.0, total = 0.0;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    if (generated[i] < 0.0 || real[i] < 0.0)
      throw Error("metrics", ErrorKind::validation, "CPC requires nonnegative flows");
    common += std::min(generated[i], real[i]);
    total += generated[i] + real[i];
  }
  if (total == 0.0) throw Error("metrics", ErrorKind::undefined_metric, "CPC undefined: both flow totals are zero");
  return 2.0 * common / total;
}

/// MAE per group label; groups without members do not appear.
inline std::map<std::string, double> grouped_mae(std::span<const std::string> groups, std::span<const double> actual,
                                                 std::span<const double> predicted) {
  detail::require_same_length(actual, predicted, 0);
  if (groups.size() != actual.size()) throw Error("metrics", ErrorKind::validation, "group label count mismatch");
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    auto& [sum, count] = acc[groups[i]];
    sum += std::abs(actual[i] - predicted[i]);
    ++count;
  }
  std::map<std::string, double> out;
  for (const auto& [g, sc] : acc) out[g] = sc.first / static_cast<double>(sc.second);
  return out;
}

}  // namespace tripgrav
