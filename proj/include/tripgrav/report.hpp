#pragma once

// Renderings of evaluation results: the comparison table (text and JSON),
// per-segment and per-day-type MAE CSVs, and the two-column top-10 feature table.

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "tripgrav/analysis.hpp"
#include "tripgrav/importance.hpp"
#include "tripgrav/serialize.hpp"

namespace tripgrav {

namespace detail {
inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

inline json scores_json(const ModelScores& s) {
  return {{"name", s.name}, {"mae", s.mae}, {"r2", s.r2}, {"cpc", s.cpc},
          {"mae_by_segment", s.mae_by_segment}, {"mae_by_day", s.mae_by_day}};
}
}  // namespace detail

inline json to_json(const ComparativeReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"model", row.model}, {"metric", to_string(row.metric)}, {"traditional", row.traditional},
                    {"data_driven", row.data_driven}, {"improvement_pct", row.improvement_pct}});
  json models = json::array();
  for (const auto& m : r.models) models.push_back(detail::scores_json(m));
  return {{"schema_version", kSchemaVersion},
          {"kind", "comparison_report"},
          {"in_sample", r.in_sample},
          {"space", r.original_space ? "original" : "transformed"},
          {"thresholds", {{"short_max_miles", r.thresholds.low}, {"medium_max_miles", r.thresholds.high}}},
          {"baseline", detail::scores_json(r.baseline)},
          {"models", models},
          {"rows", rows}};
}

/// Metrics to 4 decimals, improvements to 2.
inline std::string render_comparison_table(const ComparativeReport& r) {
  std::string s;
  s += r.in_sample ? "Evaluation on the TRAINING split (in-sample numbers)\n" : "Evaluation on the test split\n";
  s += r.original_space ? "Metrics on flow counts\n" : "Metrics on log1p-minmax transformed flows\n";
  s += "Segments: Short <= " + detail::fixed(r.thresholds.low, 2) + " mi, Medium <= " +
       detail::fixed(r.thresholds.high, 2) + " mi, Long above\n\n";
  s += detail::pad("Model", 16) + detail::pad("Metric", 8) + detail::pad("Traditional", 13) +
       detail::pad("Data-driven", 13) + "% Improvement\n";
  for (const auto& row : r.rows) {
    s += detail::pad(row.model, 16) + detail::pad(std::string(to_string(row.metric)), 8) +
         detail::pad(detail::fixed(row.traditional, 4), 13) + detail::pad(detail::fixed(row.data_driven, 4), 13) +
         detail::fixed(row.improvement_pct, 2) + "\n";
  }
  return s;
}

/// model,segment,mae with the baseline first.
inline std::string segment_mae_csv(const ComparativeReport& r) {
  std::string s = "model,segment,mae\n";
  auto emit = [&](const ModelScores& m) {
    for (const char* seg : {"Short", "Medium", "Long"}) {
      auto it = m.mae_by_segment.find(seg);
      if (it != m.mae_by_segment.end()) s += m.name + "," + seg + "," + csv::format_double(it->second) + "\n";
    }
  };
  emit(r.baseline);
  for (const auto& m : r.models) emit(m);
  return s;
}

/// model,day_type,mae; empty body when the records carry no dates.
inline std::string daytype_mae_csv(const ComparativeReport& r) {
  std::string s = "model,day_type,mae\n";
  auto emit = [&](const ModelScores& m) {
    for (const char* day : {"weekday", "weekend"}) {
      auto it = m.mae_by_day.find(day);
      if (it != m.mae_by_day.end()) s += m.name + "," + day + "," + csv::format_double(it->second) + "\n";
    }
  };
  emit(r.baseline);
  for (const auto& m : r.models) emit(m);
  return s;
}

inline json to_json(const std::vector<FeatureImportance>& ranking) {
  json out = json::array();
  for (std::size_t i = 0; i < ranking.size(); ++i)
    out.push_back({{"rank", i + 1}, {"index", ranking[i].index}, {"label", ranking[i].label},
                   {"importance", ranking[i].importance}});
  return out;
}

/// Ranks 1-5 in the first column, 6-10 in the second.
inline std::string render_top_features(const std::map<std::string, std::vector<FeatureImportance>>& by_model) {
  std::string s = detail::pad("Model", 16) + detail::pad("Top 1-5", 48) + "Top 6-10\n";
  for (const auto& [name, ranking] : by_model) {
    std::string first, second;
    for (std::size_t i = 0; i < ranking.size() && i < 10; ++i) {
      auto& col = i < 5 ? first : second;
      if (!col.empty()) col += ", ";
      col += ranking[i].label;
    }
    s += detail::pad(name, 16) + detail::pad(first, 48) + second + "\n";
  }
  return s;
}

inline std::string render_ranking_table(const std::vector<FeatureImportance>& ranking) {
  std::string s = detail::pad("Rank", 6) + detail::pad("Feature", 12) + "Importance\n";
  for (std::size_t i = 0; i < ranking.size(); ++i)
    s += detail::pad(std::to_string(i + 1), 6) + detail::pad(ranking[i].label, 12) +
         csv::format_double(ranking[i].importance) + "\n";
  return s;
}

}  // namespace tripgrav
