#pragma once

// Shared domain types for county-level trip demand modeling.
//
// Feature layout contract for a FeaturizedRecord:
//   dataset1: x = [population(origin), population(dest), distance, time]
//   dataset2: x[0..27)  = origin F1..F27
//             x[27..54) = destination F1..F27
//             x[54]     = distance (miles)
//             x[55]     = time (minutes)
// distance_raw always carries the unscaled distance in miles.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tripgrav/error.hpp"

namespace tripgrav {

inline constexpr std::size_t kCountyFeatureCount = 27;
/// Zero-based index of F27 (population) inside a county feature vector.
inline constexpr std::size_t kPopulationFeature = 26;

/// Feature indices F21, F24, F25, F26 (zero-based) are rates bounded to [0, 100].
inline constexpr std::array<std::size_t, 4> kPercentFeatures{20, 23, 24, 25};

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) noexcept { return std::isnan(v); }

struct CountyId {
  std::string state;
  std::string fips;

  friend bool operator==(const CountyId&, const CountyId&) = default;
  friend auto operator<=>(const CountyId&, const CountyId&) = default;
};

inline bool is_valid_fips(std::string_view fips) noexcept {
  if (fips.size() != 5) return false;
  for (char c : fips)
    if (c < '0' || c > '9') return false;
  return true;
}

struct CountyFeatures {
  CountyId id;
  /// F1..F27; NaN marks a missing cell awaiting imputation.
  std::array<double, kCountyFeatureCount> f{};

  double population() const noexcept { return f[kPopulationFeature]; }
};

using Date = std::chrono::year_month_day;

/// Strict ISO 8601 calendar date, "YYYY-MM-DD".
inline Date parse_date(std::string_view text) {
  auto fail = [&] {
    return Error("core_model", ErrorKind::parse, "invalid date '" + std::string(text) + "'");
  };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw fail();
  auto digits = [&](std::size_t pos, std::size_t len) {
    int value = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (text[i] < '0' || text[i] > '9') throw fail();
      value = value * 10 + (text[i] - '0');
    }
    return value;
  };
  const Date date{std::chrono::year{digits(0, 4)},
                  std::chrono::month{static_cast<unsigned>(digits(5, 2))},
                  std::chrono::day{static_cast<unsigned>(digits(8, 2))}};
  if (!date.ok()) throw fail();
  return date;
}

inline std::string format_date(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

inline Date add_days(const Date& date, int days) {
  return Date{std::chrono::sys_days{date} + std::chrono::days{days}};
}

enum class DayType { weekday, weekend };

inline constexpr std::string_view to_string(DayType t) noexcept {
  return t == DayType::weekday ? "weekday" : "weekend";
}

inline DayType day_type(const Date& date) {
  const std::chrono::weekday wd{std::chrono::sys_days{date}};
  return (wd == std::chrono::Saturday || wd == std::chrono::Sunday) ? DayType::weekend
                                                                    : DayType::weekday;
}

inline DayType day_type(std::string_view iso_date) { return day_type(parse_date(iso_date)); }

struct FlowRecord {
  std::string origin;  // FIPS
  std::string dest;    // FIPS
  Date date;
  double flow = 0.0;
};

struct Separation {
  double distance = 0.0;  // miles
  double time = 0.0;      // minutes
};

enum class DatasetVariant { dataset1, dataset2 };

inline constexpr std::size_t schema_width(DatasetVariant variant) noexcept {
  return variant == DatasetVariant::dataset1 ? 4 : 2 * kCountyFeatureCount + 2;
}

inline constexpr std::string_view to_string(DatasetVariant v) noexcept {
  return v == DatasetVariant::dataset1 ? "dataset1" : "dataset2";
}

inline DatasetVariant parse_variant(std::string_view s) {
  if (s == "dataset1") return DatasetVariant::dataset1;
  if (s == "dataset2") return DatasetVariant::dataset2;
  throw Error("core_model", ErrorKind::validation, "unknown dataset variant '" + std::string(s) + "'");
}

/// Positions of the gravity inputs inside x for each variant.
struct GravityLayout {
  std::size_t origin_population;
  std::size_t dest_population;
  std::size_t distance;
  std::size_t time;
};

inline constexpr GravityLayout gravity_layout(DatasetVariant variant) noexcept {
  if (variant == DatasetVariant::dataset1) return {0, 1, 2, 3};
  return {kPopulationFeature, kCountyFeatureCount + kPopulationFeature, 2 * kCountyFeatureCount,
          2 * kCountyFeatureCount + 1};
}

/// Human-readable label of column `index`: "F27-O", "F26-D", "Distance", "Time".
inline std::string feature_label(DatasetVariant variant, std::size_t index) {
  const auto layout = gravity_layout(variant);
  if (index == layout.distance) return "Distance";
  if (index == layout.time) return "Time";
  if (variant == DatasetVariant::dataset1) return index == 0 ? "F27-O" : "F27-D";
  if (index < kCountyFeatureCount) return "F" + std::to_string(index + 1) + "-O";
  return "F" + std::to_string(index - kCountyFeatureCount + 1) + "-D";
}

struct FeaturizedRecord {
  std::string origin;
  std::string dest;
  /// Absent for records aggregated over the whole window.
  std::optional<Date> date;
  std::vector<double> x;
  double y = 0.0;
  double distance_raw = 0.0;

  std::optional<DayType> day() const {
    if (!date) return std::nullopt;
    return day_type(*date);
  }
};

struct GravityParams {
  double k = 1.0;
  double lambda = 1.0;
  double alpha = 1.0;
  double beta = 2.0;

  bool valid() const noexcept {
    return k > 0.0 && std::isfinite(k) && std::isfinite(lambda) && std::isfinite(alpha) &&
           std::isfinite(beta);
  }
};

enum class ScalerKind { zscore, minmax };

inline constexpr std::string_view to_string(ScalerKind k) noexcept {
  return k == ScalerKind::zscore ? "zscore" : "minmax";
}

inline ScalerKind parse_scaler_kind(std::string_view s) {
  if (s == "zscore") return ScalerKind::zscore;
  if (s == "minmax") return ScalerKind::minmax;
  throw Error("core_model", ErrorKind::validation, "unknown scaler kind '" + std::string(s) + "'");
}

/// Fitted feature/target scaling. Features map to (x - center) / spread, or 0
/// when spread is 0. Targets map to (log1p(y) - target_min) / (target_max - target_min).
struct ScalerState {
  ScalerKind kind = ScalerKind::zscore;
  std::vector<double> center;
  std::vector<double> spread;
  double target_min = 0.0;
  double target_max = 0.0;
};

struct Dataset {
  DatasetVariant variant = DatasetVariant::dataset1;
  std::vector<FeaturizedRecord> records;
  /// Set once the records have been transformed; absent for raw datasets.
  std::optional<ScalerState> scaler;

  std::size_t width() const noexcept { return schema_width(variant); }
  std::size_t size() const noexcept { return records.size(); }
};

/// Dense row-major feature matrix; the input type of every learner.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) noexcept { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return values[r * cols + c]; }

  std::span<const double> row(std::size_t r) const noexcept {
    return {values.data() + r * cols, cols};
  }
  std::span<double> row(std::size_t r) noexcept { return {values.data() + r * cols, cols}; }
};

inline FeatureMatrix to_matrix(std::span<const FeaturizedRecord> records) {
  if (records.empty()) return {};
  FeatureMatrix m(records.size(), records.front().x.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (records[r].x.size() != m.cols)
      throw Error("core_model", ErrorKind::schema, "ragged feature rows");
    std::copy(records[r].x.begin(), records[r].x.end(), m.row(r).begin());
  }
  return m;
}

inline std::vector<double> targets(std::span<const FeaturizedRecord> records) {
  std::vector<double> y;
  y.reserve(records.size());
  for (const auto& r : records) y.push_back(r.y);
  return y;
}

}  // namespace tripgrav
