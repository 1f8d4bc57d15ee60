#pragma once

// Distance segmentation, weekday/weekend grouping and the traditional vs
// data-driven comparison report.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tripgrav/core.hpp"
#include "tripgrav/ingestion.hpp"
#include "tripgrav/metrics.hpp"
#include "tripgrav/model.hpp"

namespace tripgrav {

inline constexpr double kShortPercentile = 0.33;
inline constexpr double kLongPercentile = 0.66;

/// Percentile by linear interpolation between closest ranks, with the
/// 1-based rank r = 1 + p (n - 1).
inline double percentile_linear(std::vector<double> values, double p) {
  if (values.empty()) throw Error("analysis", ErrorKind::validation, "percentile of empty set");
  if (!(p >= 0.0 && p <= 1.0)) throw Error("analysis", ErrorKind::validation, "percentile must lie in [0,1]");
  std::sort(values.begin(), values.end());
  const double rank = p * static_cast<double>(values.size() - 1);  // zero-based
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

struct SegmentThresholds {
  double low = 0.0;   // 33rd percentile
  double high = 0.0;  // 66th percentile
};

inline SegmentThresholds segment_thresholds(std::span<const double> distances) {
  std::set<double> distinct(distances.begin(), distances.end());
  if (distinct.size() < 3)
    throw Error("analysis", ErrorKind::validation, "segmentation needs at least 3 distinct distances");
  std::vector<double> v(distances.begin(), distances.end());
  return {percentile_linear(v, kShortPercentile), percentile_linear(v, kLongPercentile)};
}

enum class Segment { Short, Medium, Long };

inline constexpr std::string_view to_string(Segment s) noexcept {
  switch (s) {
    case Segment::Short: return "Short";
    case Segment::Medium: return "Medium";
    case Segment::Long: return "Long";
  }
  return "Short";
}

inline Segment assign_segment(double distance, const SegmentThresholds& t) {
  if (distance < 0.0 || std::isnan(distance))
    throw Error("analysis", ErrorKind::domain, "negative distance");
  if (distance <= t.low) return Segment::Short;
  if (distance <= t.high) return Segment::Medium;
  return Segment::Long;
}

inline std::vector<double> raw_distances(std::span<const FeaturizedRecord> records) {
  std::vector<double> d;
  d.reserve(records.size());
  for (const auto& r : records) d.push_back(r.distance_raw);
  return d;
}

enum class Grouping { distance_segment, day_type };

/// Group label of each record. Day-type grouping requires dated records.
inline std::vector<std::string> group_labels(std::span<const FeaturizedRecord> records, Grouping grouping,
                                             const SegmentThresholds& thresholds = {}) {
  std::vector<std::string> labels;
  labels.reserve(records.size());
  for (const auto& r : records) {
    if (grouping == Grouping::distance_segment) {
      labels.emplace_back(to_string(assign_segment(r.distance_raw, thresholds)));
    } else {
      const auto day = r.day();
      if (!day) throw Error("analysis", ErrorKind::validation, "day-type grouping needs dated (per_day) records");
      labels.emplace_back(to_string(*day));
    }
  }
  return labels;
}

inline std::map<std::string, double> grouped_mae(std::span<const FeaturizedRecord> records,
                                                 std::span<const double> predictions, Grouping grouping,
                                                 const SegmentThresholds& thresholds = {}) {
  const auto labels = group_labels(records, grouping, thresholds);
  const auto actual = targets(records);
  return grouped_mae(labels, actual, predictions);
}

enum class MetricKind { mae, r2, cpc };

inline constexpr std::string_view to_string(MetricKind m) noexcept {
  switch (m) {
    case MetricKind::mae: return "MAE";
    case MetricKind::r2: return "R2";
    case MetricKind::cpc: return "CPC";
  }
  return "MAE";
}

/// Error reduction for MAE, score gain for R^2 and CPC, in percent of the
/// traditional value.
inline double percent_improvement(MetricKind metric, double traditional, double data_driven) {
  if (traditional == 0.0) throw Error("analysis", ErrorKind::undefined_metric, "traditional value is zero");
  if (metric == MetricKind::mae) return (traditional - data_driven) / traditional * 100.0;
  return (data_driven - traditional) / traditional * 100.0;
}

struct ModelScores {
  std::string name;
  double mae = 0.0;
  double r2 = 0.0;
  double cpc = 0.0;
  std::map<std::string, double> mae_by_segment;
  std::map<std::string, double> mae_by_day;  // empty for undated records
};

struct ComparisonRow {
  std::string model;
  MetricKind metric = MetricKind::mae;
  double traditional = 0.0;
  double data_driven = 0.0;
  double improvement_pct = 0.0;
};

struct ComparativeReport {
  SegmentThresholds thresholds;
  bool in_sample = false;
  bool original_space = false;
  ModelScores baseline;
  std::vector<ModelScores> models;
  std::vector<ComparisonRow> rows;
};

/// A fitted model together with the evaluation rows in its own feature space.
/// With original_space set, targets and predictions are mapped back to flow
/// counts through the rows' scaler before scoring.
struct EvaluatedModel {
  std::string name;
  const FittedModel* model = nullptr;
  const Dataset* rows = nullptr;
  bool original_space = false;
};

/// Scores one model. CPC compares record-aligned flows with negative
/// predictions clamped to zero.
inline ModelScores score_model(const EvaluatedModel& m, const SegmentThresholds& thresholds) {
  const auto& records = m.rows->records;
  auto actual = targets(records);
  auto pred = predict(*m.model, std::span<const FeaturizedRecord>(records));
  if (m.original_space && m.rows->scaler) {
    for (auto& v : actual) v = invert_target(v, *m.rows->scaler);
    for (auto& v : pred) v = invert_target(v, *m.rows->scaler);
  }
  std::vector<double> clamped(pred.size());
  std::transform(pred.begin(), pred.end(), clamped.begin(), [](double v) { return std::max(0.0, v); });
  std::vector<double> actual_clamped(actual.size());
  std::transform(actual.begin(), actual.end(), actual_clamped.begin(), [](double v) { return std::max(0.0, v); });
  ModelScores s;
  s.name = m.name;
  s.mae = mae(actual, pred);
  s.r2 = r_squared(actual, pred);
  s.cpc = cpc(std::span<const double>(clamped), std::span<const double>(actual_clamped));
  s.mae_by_segment = grouped_mae(group_labels(records, Grouping::distance_segment, thresholds), actual, pred);
  const bool dated = std::all_of(records.begin(), records.end(), [](const auto& r) { return r.date.has_value(); });
  if (dated) s.mae_by_day = grouped_mae(group_labels(records, Grouping::day_type), actual, pred);
  return s;
}

namespace detail {
inline void require_compatible(const Dataset& a, const Dataset& b) {
  if (a.size() != b.size())
    throw Error("analysis", ErrorKind::schema, "evaluation sets differ in size");
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& ra = a.records[i];
    const auto& rb = b.records[i];
    if (ra.origin != rb.origin || ra.dest != rb.dest || ra.date != rb.date ||
        std::abs(ra.y - rb.y) > 1e-9 * std::max(1.0, std::abs(ra.y)))
      throw Error("analysis", ErrorKind::schema, "evaluation sets are not record-aligned at row " + std::to_string(i));
  }
}
}  // namespace detail

/// Compares each data-driven model against the traditional baseline on the
/// same evaluation records.
inline ComparativeReport comparative_report(const EvaluatedModel& baseline, std::span<const EvaluatedModel> models,
                                            const SegmentThresholds& thresholds, bool in_sample = false) {
  ComparativeReport rep;
  rep.thresholds = thresholds;
  rep.in_sample = in_sample;
  rep.original_space = baseline.original_space;
  rep.baseline = score_model(baseline, thresholds);
  for (const auto& m : models) {
    detail::require_compatible(*baseline.rows, *m.rows);
    auto s = score_model(m, thresholds);
    rep.rows.push_back({s.name, MetricKind::mae, rep.baseline.mae, s.mae,
                        percent_improvement(MetricKind::mae, rep.baseline.mae, s.mae)});
    rep.rows.push_back({s.name, MetricKind::r2, rep.baseline.r2, s.r2,
                        percent_improvement(MetricKind::r2, rep.baseline.r2, s.r2)});
    rep.rows.push_back({s.name, MetricKind::cpc, rep.baseline.cpc, s.cpc,
                        percent_improvement(MetricKind::cpc, rep.baseline.cpc, s.cpc)});
    rep.models.push_back(std::move(s));
  }
  return rep;
}

}  // namespace tripgrav
