#pragma once

// Synthetic county systems and flows standing in for the proprietary
// mobility data. Two regimes: flows that follow the gravity law exactly (up to
// lognormal noise), and a nonlinear regime where non-population features
// modulate the gravity core.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "tripgrav/core.hpp"
#include "tripgrav/csv.hpp"
#include "tripgrav/gravity.hpp"
#include "tripgrav/ingestion.hpp"
#include "tripgrav/rng.hpp"

namespace tripgrav {

struct SynthCounty {
  CountyFeatures features;
  double x = 0.0;  // planar coordinates, miles
  double y = 0.0;
};

inline constexpr double kMinPopulation = 1e3;
inline constexpr double kMaxPopulation = 1e6;
inline constexpr double kRegionSide = 400.0;  // miles
inline constexpr double kMinSeparation = 1e-3;

// Expected count per 1000 residents for F1..F20.
inline constexpr std::array<double, 20> kCountRates = {
    0.8, 1.5, 6.0, 2.0, 0.6, 0.4, 0.02,  // land use F1-F7
    0.5, 2.0, 0.4, 0.3, 0.6, 0.2, 0.3, 0.5,  // points of interest F8-F15
    0.1, 1.2, 8.0,  // roads F16-F18
    0.04,  // terminals F19
    25.0,  // buildings F20
};

/// FIPS code of the i-th synthetic county: two-digit state prefix then a
/// three-digit county number.
inline std::string synth_fips(std::size_t i) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02zu%03zu", 47 + i / 999, i % 999 + 1);
  return buf;
}

inline std::vector<SynthCounty> generate_counties(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw Error("synth", ErrorKind::validation, "need at least 2 counties");
  if (n > 999 * 52) throw Error("synth", ErrorKind::validation, "too many counties");
  Rng rng(derive_seed(seed, 0xC0057));
  std::vector<SynthCounty> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& c = out[i];
    c.features.id = {"TN", synth_fips(i)};
    c.x = rng.uniform(0.0, kRegionSide);
    c.y = rng.uniform(0.0, kRegionSide);
    const double pop = std::round(
        std::exp(rng.uniform(std::log(kMinPopulation), std::log(kMaxPopulation))));
    auto& f = c.features.f;
    for (std::size_t j = 0; j < kCountRates.size(); ++j) {
      // lognormal jitter around the population-proportional mean
      const double mean = kCountRates[j] * pop / 1000.0;
      f[j] = std::round(mean * std::exp(rng.normal(-0.045, 0.3)));
    }
    f[20] = rng.uniform(2.0, 15.0);                    // unemployment %
    f[21] = std::round(rng.uniform(30000.0, 120000.0));  // median household income
    f[22] = 100.0 * f[21] / 60000.0;                   // % of state median
    f[23] = rng.uniform(5.0, 30.0);                    // poverty %
    f[24] = std::min(100.0, f[23] + rng.uniform(0.0, 15.0));  // child poverty %
    f[25] = rng.uniform(10.0, 60.0);                   // college %
    f[26] = pop;
  }
  return out;
}

inline std::vector<CountyFeatures> county_features(std::span<const SynthCounty> counties) {
  std::vector<CountyFeatures> out;
  out.reserve(counties.size());
  for (const auto& c : counties) out.push_back(c.features);
  return out;
}

/// Euclidean distance; coincident points are pushed kMinSeparation apart.
inline double planar_distance(double x1, double y1, double x2, double y2) {
  return std::max(std::hypot(x2 - x1, y2 - y1), kMinSeparation);
}

/// Distance in miles and travel time in minutes at a speed drawn uniformly
/// from [30, 70] mph per unordered pair. Self pairs get (0, 0).
inline SeparationMap synth_separations(std::span<const SynthCounty> counties, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x5EED5));
  SeparationMap out;
  for (std::size_t i = 0; i < counties.size(); ++i) {
    const auto& a = counties[i];
    out[{a.features.id.fips, a.features.id.fips}] = {0.0, 0.0};
    for (std::size_t j = i + 1; j < counties.size(); ++j) {
      const auto& b = counties[j];
      const double d = planar_distance(a.x, a.y, b.x, b.y);
      const double speed = rng.uniform(30.0, 70.0);
      const Separation sep{d, d / speed * 60.0};
      out[{a.features.id.fips, b.features.id.fips}] = sep;
      out[{b.features.id.fips, a.features.id.fips}] = sep;
    }
  }
  return out;
}

struct FlowOptions {
  Date start = Date{std::chrono::year{2021}, std::chrono::month{3}, std::chrono::day{15}};  // a Monday
  double weekend_multiplier = 1.0;
};

namespace detail {
template <typename Fn>
std::vector<FlowRecord> emit_flows(std::span<const SynthCounty> counties, std::size_t days,
                                   const FlowOptions& opt, Fn&& flow_of) {
  if (days < 1) throw Error("synth", ErrorKind::validation, "days must be >= 1");
  std::vector<FlowRecord> out;
  out.reserve(days * counties.size() * (counties.size() - 1));
  for (std::size_t t = 0; t < days; ++t) {
    const Date date = add_days(opt.start, static_cast<int>(t));
    const double day_factor = day_type(date) == DayType::weekend ? opt.weekend_multiplier : 1.0;
    for (const auto& o : counties)
      for (const auto& d : counties) {
        if (o.features.id == d.features.id) continue;
        out.push_back({o.features.id.fips, d.features.id.fips, date, flow_of(o, d) * day_factor});
      }
  }
  return out;
}
}  // namespace detail

/// flow = predict_gravity(params, ...) * exp(eps), eps ~ N(0, noise_sigma^2)
/// per record. Records are ordered by day, then origin, then destination.
inline std::vector<FlowRecord> generate_gravity_flows(std::span<const SynthCounty> counties,
                                                      const SeparationMap& separations, const GravityParams& params,
                                                      double noise_sigma, std::size_t days, std::uint64_t seed,
                                                      const FlowOptions& opt = {}) {
  if (!params.valid()) throw Error("synth", ErrorKind::validation, "invalid gravity parameters");
  if (!(noise_sigma >= 0.0)) throw Error("synth", ErrorKind::validation, "noise_sigma must be >= 0");
  Rng rng(derive_seed(seed, 0xF10E));
  return detail::emit_flows(counties, days, opt, [&](const SynthCounty& o, const SynthCounty& d) {
    const auto& sep = separations.at({o.features.id.fips, d.features.id.fips});
    const double base = predict_gravity(params, o.features.population(), d.features.population(), sep.distance);
    return noise_sigma > 0.0 ? base * std::exp(rng.normal(0.0, noise_sigma)) : base;
  });
}

// Nonlinear regime. log flow = log gravity core + modifier + noise, with
//   modifier = commerce * tanh(F9_D / commerce_scale)
//            + terminal * log1p(F19_D)
//            + income * [F22_O > income_threshold]
//            + interaction * (F26_O / 100) * tanh(F8_D / education_scale)
// Every term vanishes when F8, F9, F19 and F22 are zero.
struct NonlinearCoefficients {
  GravityParams core{0.05, 0.7, 0.7, 1.5};
  double commerce = 3.0;
  double commerce_scale = 40.0;
  double terminal = 0.8;
  double income = 2.0;
  double income_threshold = 60000.0;
  double interaction = 8.0;
  double education_scale = 40.0;
  double noise_sigma = 0.1;
  double weekend_multiplier = 0.8;
};

inline double nonlinear_modifier(const CountyFeatures& o, const CountyFeatures& d,
                                 const NonlinearCoefficients& c = {}) {
  return c.commerce * std::tanh(d.f[8] / c.commerce_scale) + c.terminal * std::log1p(d.f[18]) +
         (o.f[21] > c.income_threshold ? c.income : 0.0) +
         c.interaction * (o.f[25] / 100.0) * std::tanh(d.f[7] / c.education_scale);
}

inline std::vector<FlowRecord> generate_nonlinear_flows(std::span<const SynthCounty> counties,
                                                        const SeparationMap& separations, std::size_t days,
                                                        std::uint64_t seed, const NonlinearCoefficients& c = {},
                                                        Date start = FlowOptions{}.start) {
  Rng rng(derive_seed(seed, 0x0DD5));
  const FlowOptions opt{start, c.weekend_multiplier};
  return detail::emit_flows(counties, days, opt, [&](const SynthCounty& o, const SynthCounty& d) {
    const auto& sep = separations.at({o.features.id.fips, d.features.id.fips});
    const double core = predict_gravity(c.core, o.features.population(), d.features.population(), sep.distance);
    const double noise = c.noise_sigma > 0.0 ? rng.normal(0.0, c.noise_sigma) : 0.0;
    return core * std::exp(nonlinear_modifier(o.features, d.features, c) + noise);
  });
}

// ---------------------------------------------------------------------------
// CSV output in the layout ingestion reads back.

inline std::string county_features_csv(std::span<const SynthCounty> counties) {
  std::string s = "state,fips";
  for (std::size_t f = 1; f <= kCountyFeatureCount; ++f) s += ",f" + std::to_string(f);
  s += '\n';
  for (const auto& c : counties) {
    s += c.features.id.state + ',' + c.features.id.fips;
    for (double v : c.features.f) s += ',' + csv::format_double(v);
    s += '\n';
  }
  return s;
}

inline std::string flows_csv(std::span<const FlowRecord> flows) {
  std::string s = "origin_fips,dest_fips,date,flow\n";
  for (const auto& f : flows)
    s += f.origin + ',' + f.dest + ',' + format_date(f.date) + ',' + csv::format_double(f.flow) + '\n';
  return s;
}

inline std::string separations_csv(const SeparationMap& seps) {
  std::string s = "origin_fips,dest_fips,distance_miles,time_minutes\n";
  for (const auto& [pair, sep] : seps)
    s += pair.first + ',' + pair.second + ',' + csv::format_double(sep.distance) + ',' +
         csv::format_double(sep.time) + '\n';
  return s;
}

inline void write_synth(const std::string& dir, std::span<const SynthCounty> counties,
                        std::span<const FlowRecord> flows, const SeparationMap& seps) {
  csv::write_file(dir + "/county_features.csv", county_features_csv(counties), "synth");
  csv::write_file(dir + "/flows.csv", flows_csv(flows), "synth");
  csv::write_file(dir + "/separations.csv", separations_csv(seps), "synth");
}

}  // namespace tripgrav
