#pragma once

// Command implementations behind the tripgrav executable. run_cli() is kept
// in a header so the tests can drive the commands in-process.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tripgrav/tripgrav.hpp"

namespace tripgrav::cli {

// ---------------------------------------------------------------------------
// Config file: "key = value" lines, '#' starts a comment. Keys are long flag
// names without dashes; keys containing a dot (rf.n_estimators) are model
// hyperparameters and become --param entries.

inline std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cli", ErrorKind::io, "cannot open config '" + path + "'");
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("cli", ErrorKind::parse, path + ":" + std::to_string(lineno) + ": expected key = value");
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error("cli", ErrorKind::parse, path + ":" + std::to_string(lineno) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

inline const std::set<std::string>& boolean_flags() {
  static const std::set<std::string> flags{"tune", "self-loops"};
  return flags;
}

/// Appends config entries that the command line does not already set.
inline std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path) return args;

  auto given = [&](const std::string& flag) {
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  std::set<std::string> cli_params;
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--param") cli_params.insert(args[i + 1].substr(0, args[i + 1].find('=')));

  for (const auto& [key, value] : read_config(*path)) {
    if (key == "config") continue;
    if (key.find('.') != std::string::npos) {
      if (!cli_params.contains(key)) {
        args.push_back("--param");
        args.push_back(key + "=" + value);
      }
      continue;
    }
    const std::string flag = "--" + key;
    if (given(flag)) continue;
    if (boolean_flags().contains(key)) {
      if (value == "true" || value == "1") args.push_back(flag);
      else if (value != "false" && value != "0")
        throw Error("cli", ErrorKind::validation, "config key '" + key + "' expects true or false");
      continue;
    }
    args.push_back(flag);
    args.push_back(value);
  }
  return args;
}

// ---------------------------------------------------------------------------
// Shared option handling

inline std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("TRIPGRAV_SEED"); env && *env) {
    std::uint64_t v = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      throw Error("cli", ErrorKind::validation, "TRIPGRAV_SEED is not an unsigned integer: '" + std::string(s) + "'");
    return v;
  }
  return 0;
}

/// "rf.n_estimators=200" entries grouped by family.
inline FamilyDefaults apply_param_overrides(FamilyDefaults d, const std::vector<std::string>& params) {
  ParamPoint rf, gbr, mlp;
  for (const auto& p : params) {
    const auto eq = p.find('=');
    const auto dot = p.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
      throw Error("cli", ErrorKind::validation, "--param expects family.name=value, got '" + p + "'");
    const auto fam = p.substr(0, dot);
    const auto name = p.substr(dot + 1, eq - dot - 1);
    double value = 0.0;
    const auto text = p.substr(eq + 1);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
      throw Error("cli", ErrorKind::validation, "--param value is not a number: '" + p + "'");
    if (fam == "rf") rf[name] = value;
    else if (fam == "gbr") gbr[name] = value;
    else if (fam == "mlp") mlp[name] = value;
    else throw Error("cli", ErrorKind::validation, "--param family must be rf, gbr or mlp: '" + p + "'");
  }
  d.rf = apply_params(d.rf, rf);
  d.gbr = apply_params(d.gbr, gbr);
  d.mlp = apply_params(d.mlp, mlp);
  return d;
}

struct DataOptions {
  std::string data;
  std::string variant = "dataset1";
  std::string aggregation = "per_day";
  std::string scaler = "zscore";
  double test_fraction = 0.2;
  std::optional<std::uint64_t> seed;
  bool self_loops = false;
};

inline void add_data_options(CLI::App* cmd, DataOptions& o, bool with_variant = true) {
  cmd->add_option("--data", o.data, "directory with county_features.csv, flows.csv, separations.csv")->required();
  if (with_variant)
    cmd->add_option("--variant", o.variant, "dataset1 | dataset2")->check(CLI::IsMember({"dataset1", "dataset2"}));
  cmd->add_option("--aggregation", o.aggregation, "per_day | mean_daily")
      ->check(CLI::IsMember({"per_day", "mean_daily"}));
  cmd->add_option("--scaler", o.scaler, "zscore | minmax (features; targets are always log1p-minmax)")->check(CLI::IsMember({"minmax", "zscore"}));
  cmd->add_option("--test-fraction", o.test_fraction, "held-out share of records");
  cmd->add_option("--seed", o.seed, "master seed (falls back to TRIPGRAV_SEED, then 0)");
  cmd->add_flag("--self-loops", o.self_loops, "keep origin == destination records");
}

struct Split {
  Dataset train;
  Dataset test;
};

/// ingest -> assemble -> seeded split -> scaler fitted on the train part.
inline Split prepare_split(const RawInputs& in, DatasetVariant variant, DayAggregation aggregation,
                           bool self_loops, double test_fraction, std::uint64_t seed, ScalerKind kind) {
  const auto ds = assemble_dataset(in.counties, in.flows, in.separations, {variant, aggregation, self_loops});
  auto [train, test] = train_test_split(ds, test_fraction, seed);
  auto [strain, stest] = scale_partition(std::move(train), std::move(test), kind);
  return {std::move(strain), std::move(stest)};
}

/// Rebuilds the split an artifact was trained on and scales it with the
/// artifact's stored scaler.
inline Split artifact_split(const RawInputs& in, const ModelArtifact& a) {
  const bool self_loops = a.diagnostics.value("self_loops", false);
  const auto ds = assemble_dataset(in.counties, in.flows, in.separations, {a.variant, a.aggregation, self_loops});
  auto [train, test] = train_test_split(ds, a.test_fraction, a.seed);
  if (a.scaler) {
    train.records = apply_scaler(std::move(train.records), *a.scaler);
    test.records = apply_scaler(std::move(test.records), *a.scaler);
    train.scaler = test.scaler = a.scaler;
  }
  return {std::move(train), std::move(test)};
}

inline void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw Error("cli", ErrorKind::io, "cannot create directory '" + dir + "'" + (ec ? ": " + ec.message() : ""));
}

// ---------------------------------------------------------------------------
// Commands

struct SynthOptions {
  std::size_t counties = 50;
  std::size_t days = 7;
  std::string regime = "nonlinear";
  std::optional<std::uint64_t> seed;
  std::string out;
  double noise_sigma = 0.05;
  double k = 1.0, lambda = 1.0, alpha = 1.0, beta = 2.0;
  double weekend_multiplier = 1.0;
};

inline int cmd_synth(const SynthOptions& o, std::ostream& out) {
  const auto seed = resolve_seed(o.seed);
  ensure_directory(o.out);
  const auto counties = generate_counties(o.counties, seed);
  const auto seps = synth_separations(counties, seed);
  std::vector<FlowRecord> flows;
  json params;
  if (o.regime == "gravity") {
    const GravityParams p{o.k, o.lambda, o.alpha, o.beta};
    flows = generate_gravity_flows(counties, seps, p, o.noise_sigma, o.days, seed, {FlowOptions{}.start,
                                                                                    o.weekend_multiplier});
    params = {{"gravity", to_json(p)}, {"noise_sigma", o.noise_sigma}, {"weekend_multiplier", o.weekend_multiplier}};
  } else {
    const NonlinearCoefficients c;
    flows = generate_nonlinear_flows(counties, seps, o.days, seed, c);
    params = {{"gravity", to_json(c.core)},
              {"commerce", c.commerce},
              {"commerce_scale", c.commerce_scale},
              {"terminal", c.terminal},
              {"income", c.income},
              {"income_threshold", c.income_threshold},
              {"interaction", c.interaction},
              {"education_scale", c.education_scale},
              {"noise_sigma", c.noise_sigma},
              {"weekend_multiplier", c.weekend_multiplier}};
  }
  write_synth(o.out, counties, flows, seps);
  const json manifest = {{"schema_version", kSchemaVersion},
                         {"kind", "synth_manifest"},
                         {"seed", seed},
                         {"regime", o.regime},
                         {"counties", o.counties},
                         {"days", o.days},
                         {"flow_records", flows.size()},
                         {"params", params},
                         {"files", {"county_features.csv", "flows.csv", "separations.csv"}}};
  out << manifest.dump(2) << "\n";
  return 0;
}

inline int cmd_ingest_check(const DataOptions& o, std::ostream& out) {
  const auto in = load_inputs(o.data);
  const auto variant = parse_variant(o.variant);
  const auto ds = assemble_dataset(in.counties, in.flows, in.separations,
                                   {variant, parse_aggregation(o.aggregation), o.self_loops});
  std::set<Date> dates;
  for (const auto& f : in.flows) dates.insert(f.date);
  const json summary = {{"counties", in.counties.size()},
                        {"imputed_cells", in.imputed_cells},
                        {"flow_rows", in.flows.size()},
                        {"separation_pairs", in.separations.size()},
                        {"distinct_dates", dates.size()},
                        {"variant", o.variant},
                        {"width", ds.width()},
                        {"records", ds.size()}};
  out << summary.dump(2) << "\n";
  return 0;
}

struct TrainOptions {
  DataOptions data;
  std::string model = "gravity";
  bool tune = false;
  std::string preset;
  std::optional<std::size_t> n_iter;
  std::optional<std::size_t> folds;
  std::size_t jobs = 1;
  std::string out;
  std::string report;
  std::vector<std::string> params;
  double log_shift = 0.0;
};

inline SearchReport run_search(ModelFamily fam, const TrainOptions& o, const Dataset& train, std::uint64_t seed,
                               const FamilyDefaults& defaults) {
  if (fam == ModelFamily::gravity)
    throw Error("tuning", ErrorKind::unsupported, "the gravity model has no tunable hyperparameters");
  const auto preset_family = o.preset.empty() ? fam : parse_family(o.preset);
  if (preset_family != fam)
    throw Error("cli", ErrorKind::validation,
                "preset '" + o.preset + "' does not match model '" + std::string(to_string(fam)) + "'");
  const auto preset = preset_for(preset_family);
  SearchOptions so;
  so.n_iter = o.n_iter.value_or(preset.n_iter);
  so.k = o.folds.value_or(preset.k);
  so.seed = seed;
  so.jobs = o.jobs;
  so.defaults = defaults;
  const auto x = to_matrix(train.records);
  const auto y = targets(train.records);
  return random_search(fam, preset.space, x, y, so);
}

inline int cmd_train(const TrainOptions& o, std::ostream& out) {
  const auto seed = resolve_seed(o.data.seed);
  const auto fam = parse_family(o.model);
  const auto variant = parse_variant(o.data.variant);
  const auto aggregation = parse_aggregation(o.data.aggregation);
  const auto defaults = apply_param_overrides(tuned_defaults(), o.params);
  const auto in = load_inputs(o.data.data);
  const auto split = prepare_split(in, variant, aggregation, o.data.self_loops, o.data.test_fraction, seed,
                                   parse_scaler_kind(o.data.scaler));

  json diag = {{"train_rows", split.train.size()}, {"test_rows", split.test.size()}, {"self_loops", o.data.self_loops}};
  std::optional<FittedModel> model;
  if (fam == ModelFamily::gravity) {
    if (o.tune) throw Error("tuning", ErrorKind::unsupported, "the gravity model has no tunable hyperparameters");
    auto [gm, fit] = fit_gravity(split.train, {o.log_shift});
    diag["calibration"] = {{"r2_log", fit.r2_log},
                           {"residual_mean", fit.residual_mean},
                           {"rows_used", fit.rows_used},
                           {"rows_dropped", fit.rows_dropped},
                           {"used_pseudo_inverse", fit.used_pseudo_inverse}};
    model = std::move(gm);
  } else {
    ParamPoint chosen;
    if (o.tune) {
      const auto rep = run_search(fam, o, split.train, seed, defaults);
      if (!std::isfinite(rep.best_score))
        throw Error("tuning", ErrorKind::training, "every search trial diverged");
      chosen = rep.best_params;
      diag["tuning"] = {{"n_iter", rep.n_iter}, {"k", rep.k}, {"best_index", rep.best_index},
                        {"best_params", to_json(rep.best_params)}, {"best_cv_mae", rep.best_score}};
      if (!o.report.empty()) write_json(o.report, to_json(rep), 2);
    }
    const auto x = to_matrix(split.train.records);
    const auto y = targets(split.train.records);
    model = fit_family(fam, x, y, chosen, defaults, seed, o.jobs);
  }
  const auto train_pred = predict(*model, std::span<const FeaturizedRecord>(split.train.records));
  diag["train_mae"] = mae(targets(split.train.records), train_pred);

  ModelArtifact artifact{std::move(*model), variant, split.train.scaler, seed, o.data.test_fraction, aggregation,
                         diag};
  write_json(o.out, to_json(artifact));
  out << json{{"model", o.model}, {"variant", o.data.variant}, {"seed", seed}, {"out", o.out},
              {"diagnostics", diag}}.dump(2)
      << "\n";
  return 0;
}

inline int cmd_tune(const TrainOptions& o, std::ostream& out) {
  const auto seed = resolve_seed(o.data.seed);
  const auto fam = parse_family(o.model);
  const auto defaults = apply_param_overrides(tuned_defaults(), o.params);
  const auto in = load_inputs(o.data.data);
  const auto split = prepare_split(in, parse_variant(o.data.variant), parse_aggregation(o.data.aggregation),
                                   o.data.self_loops, o.data.test_fraction, seed, parse_scaler_kind(o.data.scaler));
  const auto rep = run_search(fam, o, split.train, seed, defaults);
  const auto j = to_json(rep);
  write_json(o.out, j, 2);
  out << json{{"best_index", rep.best_index}, {"best_params", to_json(rep.best_params)},
              {"best_cv_mae", detail::number_or_null(rep.best_score)}, {"out", o.out}}.dump(2)
      << "\n";
  return 0;
}

struct LoadedModel {
  std::string name;
  ModelArtifact artifact;
  Dataset rows;
};

/// Names are family-variant, suffixed with #2, #3 on repeats.
inline std::vector<LoadedModel> load_models(const std::vector<std::string>& paths, const RawInputs& in,
                                            bool use_train) {
  std::vector<LoadedModel> out;
  std::map<std::string, int> seen;
  for (const auto& p : paths) {
    auto artifact = artifact_from_json(read_json(p));
    auto split = artifact_split(in, artifact);
    std::string name = std::string(to_string(family(artifact.model))) + "-" + std::string(to_string(artifact.variant));
    if (int n = ++seen[name]; n > 1) name += "#" + std::to_string(n);
    out.push_back({name, std::move(artifact), use_train ? std::move(split.train) : std::move(split.test)});
  }
  return out;
}

struct EvaluateOptions {
  std::string data;
  std::vector<std::string> models;
  std::string split = "test";
  std::string format = "table";
  std::string out_dir;
  std::size_t repeats = 5;
  std::size_t top = 10;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string space = "transformed";
};

/// Segment thresholds over every record (train and test) of an artifact's dataset.
inline SegmentThresholds dataset_thresholds(const RawInputs& in, const ModelArtifact& a) {
  const bool self_loops = a.diagnostics.value("self_loops", false);
  const auto ds = assemble_dataset(in.counties, in.flows, in.separations, {a.variant, a.aggregation, self_loops});
  return segment_thresholds(raw_distances(ds.records));
}

inline int cmd_evaluate(const EvaluateOptions& o, std::ostream& out) {
  const auto seed = resolve_seed(o.seed);
  const auto in = load_inputs(o.data);
  auto loaded = load_models(o.models, in, o.split == "train");
  const LoadedModel* baseline = nullptr;
  std::vector<EvaluatedModel> others;
  for (const auto& m : loaded) {
    if (family(m.artifact.model) == ModelFamily::gravity && !baseline) baseline = &m;
    else others.push_back({m.name, &m.artifact.model, &m.rows, o.space == "original"});
  }
  if (!baseline) throw Error("analysis", ErrorKind::validation, "evaluate needs a gravity model as the baseline");
  if (others.empty()) throw Error("analysis", ErrorKind::validation, "evaluate needs at least one data-driven model");

  const auto thresholds = dataset_thresholds(in, baseline->artifact);
  const auto report =
      comparative_report({baseline->name, &baseline->artifact.model, &baseline->rows, o.space == "original"}, others,
                         thresholds, o.split == "train");
  std::map<std::string, std::vector<FeatureImportance>> top;
  for (const auto& m : others) {
    const auto ranking = permutation_importance(*m.model, *m.rows, o.repeats, seed, o.jobs);
    top[m.name] = top_k(ranking, std::min(o.top, ranking.size()));
  }
  json top_json = json::object();
  for (const auto& [name, r] : top) top_json[name] = to_json(r);
  const json full = {{"comparison", to_json(report)}, {"top_features", top_json}, {"importance_seed", seed},
                     {"importance_repeats", o.repeats}};
  const std::string table = render_comparison_table(report) + "\n" + render_top_features(top);

  if (!o.out_dir.empty()) {
    ensure_directory(o.out_dir);
    write_json(o.out_dir + "/comparison.json", full, 2);
    csv::write_file(o.out_dir + "/comparison.txt", table, "cli");
    csv::write_file(o.out_dir + "/segment_mae.csv", segment_mae_csv(report), "cli");
    csv::write_file(o.out_dir + "/daytype_mae.csv", daytype_mae_csv(report), "cli");
  }
  if (o.format == "json") out << full.dump(2) << "\n";
  else out << table;
  return 0;
}

struct ImportanceOptions {
  std::string data;
  std::string model;
  std::string split = "test";
  std::string method = "permutation";
  std::size_t repeats = 5;
  std::size_t top = 10;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string format = "table";
  std::string out;
};

inline int cmd_importance(const ImportanceOptions& o, std::ostream& out) {
  const auto seed = resolve_seed(o.seed);
  const auto in = load_inputs(o.data);
  const auto loaded = load_models({o.model}, in, o.split == "train");
  const auto& m = loaded.front();
  const auto ranking = o.method == "impurity"
                           ? impurity_importance(m.artifact.model, m.artifact.variant)
                           : permutation_importance(m.artifact.model, m.rows, o.repeats, seed, o.jobs);
  const auto best = top_k(ranking, std::min(o.top, ranking.size()));
  const json j = {{"schema_version", kSchemaVersion}, {"kind", "importance"}, {"model", m.name},
                  {"method", o.method}, {"split", o.split}, {"seed", seed}, {"repeats", o.repeats},
                  {"ranking", to_json(best)}};
  if (!o.out.empty()) write_json(o.out, j, 2);
  if (o.format == "json") out << j.dump(2) << "\n";
  else out << m.name << " (" << o.method << ")\n" << render_ranking_table(best);
  return 0;
}

struct SegmentOptions {
  DataOptions data;
  std::string model;
  std::string split = "all";
  std::string format = "table";
};

inline int cmd_segment(const SegmentOptions& o, std::ostream& out) {
  const auto in = load_inputs(o.data.data);
  json j = {{"schema_version", kSchemaVersion}, {"kind", "segmentation"}, {"split", o.split}};
  Dataset rows;
  std::optional<LoadedModel> model;
  SegmentThresholds t;
  if (!o.model.empty()) {
    if (o.split == "all") throw Error("cli", ErrorKind::validation, "--model needs --split train or test");
    model = std::move(load_models({o.model}, in, o.split == "train").front());
    rows = model->rows;
    t = dataset_thresholds(in, model->artifact);
  } else {
    const auto seed = resolve_seed(o.data.seed);
    const auto ds = assemble_dataset(in.counties, in.flows, in.separations,
                                     {DatasetVariant::dataset1, parse_aggregation(o.data.aggregation),
                                      o.data.self_loops});
    t = segment_thresholds(raw_distances(ds.records));
    if (o.split == "all") {
      rows = ds;
    } else {
      auto [train, test] = train_test_split(ds, o.data.test_fraction, seed);
      rows = o.split == "train" ? std::move(train) : std::move(test);
    }
  }
  std::map<std::string, std::size_t> counts{{"Short", 0}, {"Medium", 0}, {"Long", 0}};
  for (const auto& r : rows.records) ++counts[std::string(to_string(assign_segment(r.distance_raw, t)))];
  j["thresholds"] = {{"short_max_miles", t.low}, {"medium_max_miles", t.high}};
  j["counts"] = counts;
  if (model) {
    const auto pred = predict(model->artifact.model, std::span<const FeaturizedRecord>(rows.records));
    j["model"] = model->name;
    j["mae_by_segment"] = grouped_mae(rows.records, pred, Grouping::distance_segment, t);
  }
  if (o.format == "json") {
    out << j.dump(2) << "\n";
    return 0;
  }
  out << "Short <= " << detail::fixed(t.low, 2) << " mi < Medium <= " << detail::fixed(t.high, 2) << " mi < Long\n";
  for (const char* seg : {"Short", "Medium", "Long"}) {
    out << seg << ": " << counts[seg] << " records";
    if (model) out << ", MAE " << csv::format_double(j["mae_by_segment"][seg].get<double>());
    out << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Entry point

/// Exit codes: 0 success, 1 validation/model error, 2 I/O error.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = merge_config(std::move(args));
  } catch (const Error& e) {
    err << e.what() << "\n";
    return e.kind() == ErrorKind::io ? 2 : 1;
  }

  CLI::App app{"Origin-destination trip demand: gravity models, tree ensembles and MLPs", "tripgrav"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "flat key = value defaults file")->configurable(false);
  app.fallthrough();

  SynthOptions synth;
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic county system and flows");
  c_synth->add_option("--counties", synth.counties);
  c_synth->add_option("--days", synth.days);
  c_synth->add_option("--regime", synth.regime)->check(CLI::IsMember({"gravity", "nonlinear"}));
  c_synth->add_option("--seed", synth.seed);
  c_synth->add_option("--out", synth.out)->required();
  c_synth->add_option("--noise-sigma", synth.noise_sigma, "lognormal noise (gravity regime)");
  c_synth->add_option("--k", synth.k);
  c_synth->add_option("--lambda", synth.lambda);
  c_synth->add_option("--alpha", synth.alpha);
  c_synth->add_option("--beta", synth.beta);
  c_synth->add_option("--weekend-multiplier", synth.weekend_multiplier, "gravity regime weekend factor");

  DataOptions check;
  auto* c_check = app.add_subcommand("ingest-check", "load and validate a data directory");
  add_data_options(c_check, check);

  TrainOptions train;
  auto* c_train = app.add_subcommand("train", "fit one model and save it");
  add_data_options(c_train, train.data);
  c_train->add_option("--model", train.model)->check(CLI::IsMember({"gravity", "rf", "gbr", "mlp"}));
  c_train->add_flag("--tune", train.tune, "run the randomized search first");
  c_train->add_option("--preset", train.preset, "search preset: rf | gbr | mlp")
      ->check(CLI::IsMember({"rf", "gbr", "mlp"}));
  c_train->add_option("--n-iter", train.n_iter);
  c_train->add_option("--folds", train.folds);
  c_train->add_option("--jobs", train.jobs)->check(CLI::PositiveNumber);
  c_train->add_option("--out", train.out)->required();
  c_train->add_option("--report", train.report, "write the search report here when tuning");
  c_train->add_option("--param", train.params, "hyperparameter override family.name=value");
  c_train->add_option("--log-shift", train.log_shift, "gravity: fit log(T + shift) and keep zero flows");

  TrainOptions tune;
  auto* c_tune = app.add_subcommand("tune", "run the randomized search and save its report");
  add_data_options(c_tune, tune.data);
  c_tune->add_option("--model", tune.model)->required()->check(CLI::IsMember({"rf", "gbr", "mlp"}));
  c_tune->add_option("--preset", tune.preset)->check(CLI::IsMember({"rf", "gbr", "mlp"}));
  c_tune->add_option("--n-iter", tune.n_iter);
  c_tune->add_option("--folds", tune.folds);
  c_tune->add_option("--jobs", tune.jobs)->check(CLI::PositiveNumber);
  c_tune->add_option("--out", tune.out)->required();
  c_tune->add_option("--param", tune.params);

  EvaluateOptions eval;
  auto* c_eval = app.add_subcommand("evaluate", "compare saved models against the gravity baseline");
  c_eval->add_option("--data", eval.data)->required();
  c_eval->add_option("--model", eval.models, "model artifact (repeat; one must be gravity)")->required();
  c_eval->add_option("--split", eval.split)->check(CLI::IsMember({"train", "test"}));
  c_eval->add_option("--format", eval.format)->check(CLI::IsMember({"table", "json"}));
  c_eval->add_option("--out-dir", eval.out_dir);
  c_eval->add_option("--repeats", eval.repeats)->check(CLI::PositiveNumber);
  c_eval->add_option("--top", eval.top)->check(CLI::PositiveNumber);
  c_eval->add_option("--seed", eval.seed);
  c_eval->add_option("--jobs", eval.jobs)->check(CLI::PositiveNumber);
  c_eval->add_option("--space", eval.space, "transformed | original (flow counts)")
      ->check(CLI::IsMember({"transformed", "original"}));

  ImportanceOptions imp;
  auto* c_imp = app.add_subcommand("importance", "rank the input features of a saved model");
  c_imp->add_option("--data", imp.data)->required();
  c_imp->add_option("--model", imp.model)->required();
  c_imp->add_option("--split", imp.split)->check(CLI::IsMember({"train", "test"}));
  c_imp->add_option("--method", imp.method)->check(CLI::IsMember({"permutation", "impurity"}));
  c_imp->add_option("--repeats", imp.repeats)->check(CLI::PositiveNumber);
  c_imp->add_option("--top", imp.top)->check(CLI::PositiveNumber);
  c_imp->add_option("--seed", imp.seed);
  c_imp->add_option("--jobs", imp.jobs)->check(CLI::PositiveNumber);
  c_imp->add_option("--format", imp.format)->check(CLI::IsMember({"table", "json"}));
  c_imp->add_option("--out", imp.out);

  SegmentOptions seg;
  auto* c_seg = app.add_subcommand("segment", "distance segmentation thresholds and counts");
  add_data_options(c_seg, seg.data, false);
  c_seg->add_option("--model", seg.model, "also report this model's per-segment MAE");
  c_seg->add_option("--split", seg.split)->check(CLI::IsMember({"all", "train", "test"}));
  c_seg->add_option("--format", seg.format)->check(CLI::IsMember({"table", "json"}));

  std::vector<const char*> cargs{argv[0]};
  for (const auto& a : args) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "cli: validation: " << e.what() << "\n";
    return 1;
  }

  try {
    if (c_synth->parsed()) return cmd_synth(synth, out);
    if (c_check->parsed()) return cmd_ingest_check(check, out);
    if (c_train->parsed()) return cmd_train(train, out);
    if (c_tune->parsed()) return cmd_tune(tune, out);
    if (c_eval->parsed()) return cmd_evaluate(eval, out);
    if (c_imp->parsed()) return cmd_importance(imp, out);
    if (c_seg->parsed()) return cmd_segment(seg, out);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return e.kind() == ErrorKind::io ? 2 : 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "cli: io: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "cli: internal: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace tripgrav::cli
