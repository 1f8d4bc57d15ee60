#pragma once

// Loading, imputation, scaling, dataset assembly and train/test splitting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "tripgrav/core.hpp"
#include "tripgrav/csv.hpp"
#include "tripgrav/rng.hpp"

namespace tripgrav {

using PairKey = std::pair<std::string, std::string>;
using SeparationMap = std::map<PairKey, Separation>;

enum class DayAggregation { per_day, mean_daily };

inline constexpr std::string_view to_string(DayAggregation a) noexcept {
  return a == DayAggregation::per_day ? "per_day" : "mean_daily";
}

inline DayAggregation parse_aggregation(std::string_view s) {
  if (s == "per_day") return DayAggregation::per_day;
  if (s == "mean_daily") return DayAggregation::mean_daily;
  throw Error("ingestion", ErrorKind::validation, "unknown day aggregation '" + std::string(s) + "'");
}

namespace detail {
inline const char* kIngest = "ingestion";

inline std::string pair_name(const PairKey& p) { return "(" + p.first + "," + p.second + ")"; }
}  // namespace detail

// ---------------------------------------------------------------------------
// Loading

inline std::vector<CountyFeatures> load_county_features(const std::string& path) {
  const auto table = csv::read(path, detail::kIngest);
  const auto state_col = table.column("state", detail::kIngest);
  const auto fips_col = table.column("fips", detail::kIngest);
  std::array<std::size_t, kCountyFeatureCount> cols{};
  for (std::size_t f = 0; f < kCountyFeatureCount; ++f)
    cols[f] = table.column("f" + std::to_string(f + 1), detail::kIngest);

  std::vector<CountyFeatures> out;
  std::set<std::string> seen;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    CountyFeatures county;
    county.id = {row[state_col], row[fips_col]};
    if (!is_valid_fips(county.id.fips))
      throw Error(detail::kIngest, ErrorKind::validation,
                  path + ":" + std::to_string(table.lines[r]) + ": invalid FIPS '" + county.id.fips + "'");
    if (county.id.state.size() != 2)
      throw Error(detail::kIngest, ErrorKind::validation,
                  path + ":" + std::to_string(table.lines[r]) + ": invalid state code '" + county.id.state + "'");
    if (!seen.insert(county.id.fips).second)
      throw Error(detail::kIngest, ErrorKind::validation, path + ": duplicate FIPS '" + county.id.fips + "'");
    for (std::size_t f = 0; f < kCountyFeatureCount; ++f) {
      const auto& cell = row[cols[f]];
      county.f[f] = cell.empty() ? kMissing : csv::parse_double(cell, table, r, cols[f], detail::kIngest);
    }
    out.push_back(std::move(county));
  }
  return out;
}

/// Range checks that hold once every cell has been imputed.
inline void validate_county_features(std::span<const CountyFeatures> features) {
  for (const auto& c : features) {
    for (std::size_t f = 0; f < kCountyFeatureCount; ++f) {
      const double v = c.f[f];
      const std::string where = c.id.fips + " F" + std::to_string(f + 1);
      if (is_missing(v))
        throw Error(detail::kIngest, ErrorKind::validation, where + " is missing (impute first)");
      if (v < 0.0) throw Error(detail::kIngest, ErrorKind::validation, where + " is negative");
    }
    for (auto f : kPercentFeatures)
      if (c.f[f] > 100.0)
        throw Error(detail::kIngest, ErrorKind::validation,
                    c.id.fips + " F" + std::to_string(f + 1) + " exceeds 100%");
    if (!(c.population() > 0.0))
      throw Error(detail::kIngest, ErrorKind::validation, c.id.fips + " F27 (population) must be > 0");
  }
}

/// Reads flows, validates them against the county table and sums duplicate
/// (origin, dest, date) rows. Output is ordered by (origin, dest, date).
inline std::vector<FlowRecord> load_flows(const std::string& path,
                                          std::span<const CountyFeatures> counties) {
  const auto table = csv::read(path, detail::kIngest);
  const auto o_col = table.column("origin_fips", detail::kIngest);
  const auto d_col = table.column("dest_fips", detail::kIngest);
  const auto date_col = table.column("date", detail::kIngest);
  const auto flow_col = table.column("flow", detail::kIngest);

  std::set<std::string> known;
  for (const auto& c : counties) known.insert(c.id.fips);

  std::map<std::tuple<std::string, std::string, Date>, double> summed;
  std::set<std::string> unknown;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const double flow = csv::parse_double(row[flow_col], table, r, flow_col, detail::kIngest);
    if (flow < 0.0)
      throw Error(detail::kIngest, ErrorKind::validation,
                  path + ":" + std::to_string(table.lines[r]) + ": negative flow " + row[flow_col]);
    Date date;
    try {
      date = parse_date(row[date_col]);
    } catch (const Error&) {
      throw Error(detail::kIngest, ErrorKind::parse,
                  path + ":" + std::to_string(table.lines[r]) + ": invalid date '" + row[date_col] + "'");
    }
    if (!known.contains(row[o_col])) unknown.insert(row[o_col]);
    if (!known.contains(row[d_col])) unknown.insert(row[d_col]);
    summed[{row[o_col], row[d_col], date}] += flow;
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& u : unknown) list += (list.empty() ? "" : ", ") + u;
    throw Error(detail::kIngest, ErrorKind::validation, path + ": unknown FIPS: " + list);
  }

  std::vector<FlowRecord> out;
  out.reserve(summed.size());
  for (const auto& [key, flow] : summed)
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), flow});
  return out;
}

inline SeparationMap load_separation_matrix(const std::string& path) {
  const auto table = csv::read(path, detail::kIngest);
  const auto o_col = table.column("origin_fips", detail::kIngest);
  const auto d_col = table.column("dest_fips", detail::kIngest);
  const auto dist_col = table.column("distance_miles", detail::kIngest);
  const auto time_col = table.column("time_minutes", detail::kIngest);
  SeparationMap out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const Separation sep{csv::parse_double(row[dist_col], table, r, dist_col, detail::kIngest),
                         csv::parse_double(row[time_col], table, r, time_col, detail::kIngest)};
    const std::string where = path + ":" + std::to_string(table.lines[r]) + ": ";
    if (sep.distance < 0.0 || sep.time < 0.0)
      throw Error(detail::kIngest, ErrorKind::validation, where + "negative distance or time");
    if (row[o_col] != row[d_col] && sep.distance <= 0.0)
      throw Error(detail::kIngest, ErrorKind::validation,
                  where + "zero distance between distinct counties " + detail::pair_name({row[o_col], row[d_col]}));
    if (!out.emplace(PairKey{row[o_col], row[d_col]}, sep).second)
      throw Error(detail::kIngest, ErrorKind::validation,
                  where + "duplicate pair " + detail::pair_name({row[o_col], row[d_col]}));
  }
  return out;
}

/// Every pair referenced by a (non-excluded) flow must have a separation entry.
inline void require_coverage(std::span<const FlowRecord> flows, const SeparationMap& separations,
                             bool include_self_loops = false) {
  std::set<PairKey> missing;
  for (const auto& f : flows) {
    if (f.origin == f.dest && !include_self_loops) continue;
    if (!separations.contains({f.origin, f.dest})) missing.insert({f.origin, f.dest});
  }
  if (missing.empty()) return;
  std::string list;
  std::size_t shown = 0;
  for (const auto& p : missing) {
    if (shown++ == 20) {
      list += ", ...";
      break;
    }
    list += (list.empty() ? "" : ", ") + detail::pair_name(p);
  }
  throw Error(detail::kIngest, ErrorKind::coverage,
              std::to_string(missing.size()) + " pair(s) lack separation data: " + list);
}

// ---------------------------------------------------------------------------
// Imputation

/// Median with the even-count rule (mean of the two middle values).
inline double median(std::vector<double> values) {
  if (values.empty()) throw Error(detail::kIngest, ErrorKind::validation, "median of empty set");
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return lower + (upper - lower) / 2.0;
}

inline std::vector<CountyFeatures> impute_median(std::vector<CountyFeatures> features) {
  for (std::size_t f = 0; f < kCountyFeatureCount; ++f) {
    std::vector<double> present;
    bool any_missing = false;
    for (const auto& c : features) {
      if (is_missing(c.f[f]))
        any_missing = true;
      else
        present.push_back(c.f[f]);
    }
    if (!any_missing) continue;
    if (present.empty())
      throw Error(detail::kIngest, ErrorKind::imputation,
                  "feature F" + std::to_string(f + 1) + " has no observed values");
    const double m = median(std::move(present));
    for (auto& c : features)
      if (is_missing(c.f[f])) c.f[f] = m;
  }
  return features;
}

// ---------------------------------------------------------------------------
// Scaling

inline ScalerState fit_scaler(std::span<const FeaturizedRecord> train_rows, ScalerKind kind) {
  if (train_rows.size() < 2)
    throw Error(detail::kIngest, ErrorKind::validation, "fit_scaler needs at least 2 rows");
  const std::size_t width = train_rows.front().x.size();
  const double n = static_cast<double>(train_rows.size());
  ScalerState s;
  s.kind = kind;
  s.center.assign(width, 0.0);
  s.spread.assign(width, 0.0);
  for (const auto& r : train_rows)
    if (r.x.size() != width) throw Error(detail::kIngest, ErrorKind::schema, "ragged training rows");

  for (std::size_t j = 0; j < width; ++j) {
    if (kind == ScalerKind::zscore) {
      double sum = 0.0;
      for (const auto& r : train_rows) sum += r.x[j];
      const double mean = sum / n;
      double ss = 0.0;
      for (const auto& r : train_rows) ss += (r.x[j] - mean) * (r.x[j] - mean);
      s.center[j] = mean;
      s.spread[j] = std::sqrt(ss / n);
    } else {
      double lo = train_rows.front().x[j];
      double hi = lo;
      for (const auto& r : train_rows) {
        lo = std::min(lo, r.x[j]);
        hi = std::max(hi, r.x[j]);
      }
      s.center[j] = lo;
      s.spread[j] = hi - lo;
    }
  }
  s.target_min = s.target_max = std::log1p(train_rows.front().y);
  for (const auto& r : train_rows) {
    const double t = std::log1p(r.y);
    s.target_min = std::min(s.target_min, t);
    s.target_max = std::max(s.target_max, t);
  }
  return s;
}

inline double transform_target(double y, const ScalerState& s) {
  const double range = s.target_max - s.target_min;
  if (range <= 0.0) return 0.0;
  return (std::log1p(y) - s.target_min) / range;
}

inline double invert_target(double t, const ScalerState& s) {
  return std::expm1(t * (s.target_max - s.target_min) + s.target_min);
}

inline double scale_feature(double v, std::size_t j, const ScalerState& s) {
  return s.spread[j] > 0.0 ? (v - s.center[j]) / s.spread[j] : 0.0;
}

inline double invert_feature(double v, std::size_t j, const ScalerState& s) {
  return s.spread[j] > 0.0 ? v * s.spread[j] + s.center[j] : s.center[j];
}

inline std::vector<FeaturizedRecord> apply_scaler(std::vector<FeaturizedRecord> rows, const ScalerState& s) {
  for (auto& r : rows) {
    if (r.x.size() != s.center.size())
      throw Error(detail::kIngest, ErrorKind::schema,
                  "row width " + std::to_string(r.x.size()) + " does not match scaler width " +
                      std::to_string(s.center.size()));
    for (std::size_t j = 0; j < r.x.size(); ++j) r.x[j] = scale_feature(r.x[j], j, s);
    r.y = transform_target(r.y, s);
  }
  return rows;
}

inline std::vector<FeaturizedRecord> invert_scaler(std::vector<FeaturizedRecord> rows, const ScalerState& s) {
  for (auto& r : rows) {
    if (r.x.size() != s.center.size())
      throw Error(detail::kIngest, ErrorKind::schema, "row width does not match scaler width");
    for (std::size_t j = 0; j < r.x.size(); ++j) r.x[j] = invert_feature(r.x[j], j, s);
    r.y = invert_target(r.y, s);
  }
  return rows;
}

/// Fits a scaler on `train` and applies it to both partitions.
inline std::pair<Dataset, Dataset> scale_partition(Dataset train, Dataset test, ScalerKind kind) {
  const auto state = fit_scaler(train.records, kind);
  train.records = apply_scaler(std::move(train.records), state);
  test.records = apply_scaler(std::move(test.records), state);
  train.scaler = state;
  test.scaler = state;
  return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Assembly and splitting

struct AssemblyOptions {
  DatasetVariant variant = DatasetVariant::dataset1;
  DayAggregation aggregation = DayAggregation::per_day;
  bool include_self_loops = false;
};

/// Joins imputed county features, flows and separations into model rows.
/// Under mean_daily the target is total flow divided by the number of distinct
/// dates in the flow table (a pair absent on a date contributes zero).
inline Dataset assemble_dataset(std::span<const CountyFeatures> features, std::span<const FlowRecord> flows,
                                const SeparationMap& separations, const AssemblyOptions& opt = {}) {
  require_coverage(flows, separations, opt.include_self_loops);
  std::map<std::string, const CountyFeatures*> by_fips;
  for (const auto& c : features) {
    for (double v : c.f)
      if (is_missing(v))
        throw Error(detail::kIngest, ErrorKind::validation, "county " + c.id.fips + " has unimputed features");
    by_fips[c.id.fips] = &c;
  }

  auto make_x = [&](const CountyFeatures& o, const CountyFeatures& d, const Separation& sep) {
    std::vector<double> x;
    x.reserve(schema_width(opt.variant));
    if (opt.variant == DatasetVariant::dataset1) {
      x = {o.population(), d.population(), sep.distance, sep.time};
    } else {
      x.insert(x.end(), o.f.begin(), o.f.end());
      x.insert(x.end(), d.f.begin(), d.f.end());
      x.push_back(sep.distance);
      x.push_back(sep.time);
    }
    return x;
  };

  Dataset ds;
  ds.variant = opt.variant;
  auto lookup = [&](const std::string& fips) {
    auto it = by_fips.find(fips);
    if (it == by_fips.end())
      throw Error(detail::kIngest, ErrorKind::validation, "flow references unknown FIPS " + fips);
    return it->second;
  };

  if (opt.aggregation == DayAggregation::per_day) {
    for (const auto& f : flows) {
      if (f.origin == f.dest && !opt.include_self_loops) continue;
      const auto& sep = separations.at({f.origin, f.dest});
      ds.records.push_back({f.origin, f.dest, f.date, make_x(*lookup(f.origin), *lookup(f.dest), sep), f.flow,
                            sep.distance});
    }
    return ds;
  }

  std::set<Date> dates;
  std::map<PairKey, double> totals;
  for (const auto& f : flows) {
    dates.insert(f.date);
    if (f.origin == f.dest && !opt.include_self_loops) continue;
    totals[{f.origin, f.dest}] += f.flow;
  }
  const double n_dates = static_cast<double>(dates.size());
  for (const auto& [pair, total] : totals) {
    const auto& sep = separations.at(pair);
    ds.records.push_back({pair.first, pair.second, std::nullopt,
                          make_x(*lookup(pair.first), *lookup(pair.second), sep), total / n_dates,
                          sep.distance});
  }
  return ds;
}

/// Seeded shuffle split. Record order inside each partition follows the input
/// order. A scaled input is unscaled, split, and rescaled on the new train part.
inline std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  const std::size_t n = ds.size();
  if (n < 2) throw Error(detail::kIngest, ErrorKind::validation, "split needs at least 2 records");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error(detail::kIngest, ErrorKind::validation, "test fraction must lie in (0,1)");
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  if (n_test == 0 || n_test >= n)
    throw Error(detail::kIngest, ErrorKind::validation,
                "test fraction " + csv::format_double(test_fraction) + " of " + std::to_string(n) +
                    " records leaves an empty partition");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0x5B117));
  shuffle(std::span(order), rng);
  std::vector<char> is_test(n, 0);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = 1;

  std::vector<FeaturizedRecord> source =
      ds.scaler ? invert_scaler(ds.records, *ds.scaler) : ds.records;
  Dataset train{ds.variant, {}, std::nullopt};
  Dataset test{ds.variant, {}, std::nullopt};
  train.records.reserve(n - n_test);
  test.records.reserve(n_test);
  for (std::size_t i = 0; i < n; ++i) (is_test[i] ? test : train).records.push_back(std::move(source[i]));
  if (ds.scaler) return scale_partition(std::move(train), std::move(test), ds.scaler->kind);
  return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Directory-level convenience

struct RawInputs {
  std::vector<CountyFeatures> counties;  // imputed and validated
  std::vector<FlowRecord> flows;
  SeparationMap separations;
  std::size_t imputed_cells = 0;
};

inline RawInputs load_inputs(const std::string& dir) {
  RawInputs in;
  auto raw = load_county_features(dir + "/county_features.csv");
  for (const auto& c : raw)
    for (double v : c.f) in.imputed_cells += is_missing(v) ? 1 : 0;
  in.counties = impute_median(std::move(raw));
  validate_county_features(in.counties);
  in.flows = load_flows(dir + "/flows.csv", in.counties);
  in.separations = load_separation_matrix(dir + "/separations.csv");
  return in;
}

}  // namespace tripgrav
