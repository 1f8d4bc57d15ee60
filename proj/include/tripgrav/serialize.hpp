#pragma once

// Versioned JSON for models, scalers, configurations and search reports.
// Doubles are written in shortest round-trip form, so save -> load -> save is
// byte-identical; infinities (diverged search trials) are written as null.

#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tripgrav/ingestion.hpp"
#include "tripgrav/model.hpp"
#include "tripgrav/tuning.hpp"

namespace tripgrav {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

namespace detail {
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
inline double number_or_inf(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw Error("cli", ErrorKind::schema, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error("cli", ErrorKind::schema, std::string("field '") + key + "': " + e.what());
  }
}
}  // namespace detail

// --- scaler ----------------------------------------------------------------

inline json to_json(const ScalerState& s) {
  return {{"kind", to_string(s.kind)}, {"center", s.center}, {"spread", s.spread},
          {"target_min", s.target_min}, {"target_max", s.target_max}};
}

inline ScalerState scaler_from_json(const json& j) {
  ScalerState s;
  s.kind = parse_scaler_kind(detail::field<std::string>(j, "kind"));
  s.center = detail::field<std::vector<double>>(j, "center");
  s.spread = detail::field<std::vector<double>>(j, "spread");
  s.target_min = detail::field<double>(j, "target_min");
  s.target_max = detail::field<double>(j, "target_max");
  if (s.center.size() != s.spread.size()) throw Error("cli", ErrorKind::schema, "scaler center/spread size mismatch");
  return s;
}

// --- configurations ----------------------------------------------------------

inline json to_json(const GravityParams& p) {
  return {{"k", p.k}, {"lambda", p.lambda}, {"alpha", p.alpha}, {"beta", p.beta}};
}

inline GravityParams gravity_params_from_json(const json& j) {
  return {detail::field<double>(j, "k"), detail::field<double>(j, "lambda"), detail::field<double>(j, "alpha"),
          detail::field<double>(j, "beta")};
}

inline json to_json(const MaxFeatures& m) {
  static constexpr const char* names[] = {"all", "sqrt", "count", "fraction"};
  return {{"kind", names[static_cast<int>(m.kind)]}, {"value", m.value}};
}

inline MaxFeatures max_features_from_json(const json& j) {
  const auto kind = detail::field<std::string>(j, "kind");
  const double value = detail::field<double>(j, "value");
  if (kind == "all") return {MaxFeatures::Kind::all, value};
  if (kind == "sqrt") return {MaxFeatures::Kind::sqrt, value};
  if (kind == "count") return {MaxFeatures::Kind::count, value};
  if (kind == "fraction") return {MaxFeatures::Kind::fraction, value};
  throw Error("cli", ErrorKind::schema, "unknown max_features kind '" + kind + "'");
}

inline json to_json(const ForestConfig& c) {
  return {{"n_estimators", c.n_estimators}, {"max_depth", c.max_depth},
          {"min_samples_split", c.min_samples_split}, {"min_samples_leaf", c.min_samples_leaf},
          {"max_features", to_json(c.max_features)}, {"bootstrap", c.bootstrap}, {"seed", c.seed}};
}

inline ForestConfig forest_config_from_json(const json& j) {
  ForestConfig c;
  c.n_estimators = detail::field<std::size_t>(j, "n_estimators");
  c.max_depth = detail::field<int>(j, "max_depth");
  c.min_samples_split = detail::field<std::size_t>(j, "min_samples_split");
  c.min_samples_leaf = detail::field<std::size_t>(j, "min_samples_leaf");
  c.max_features = max_features_from_json(j.at("max_features"));
  c.bootstrap = detail::field<bool>(j, "bootstrap");
  c.seed = detail::field<std::uint64_t>(j, "seed");
  return c;
}

inline json to_json(const BoostConfig& c) {
  return {{"n_estimators", c.n_estimators}, {"learning_rate", c.learning_rate}, {"max_depth", c.max_depth},
          {"min_samples_split", c.min_samples_split}, {"min_samples_leaf", c.min_samples_leaf},
          {"subsample", c.subsample}, {"seed", c.seed}};
}

inline BoostConfig boost_config_from_json(const json& j) {
  BoostConfig c;
  c.n_estimators = detail::field<std::size_t>(j, "n_estimators");
  c.learning_rate = detail::field<double>(j, "learning_rate");
  c.max_depth = detail::field<int>(j, "max_depth");
  c.min_samples_split = detail::field<std::size_t>(j, "min_samples_split");
  c.min_samples_leaf = detail::field<std::size_t>(j, "min_samples_leaf");
  c.subsample = detail::field<double>(j, "subsample");
  c.seed = detail::field<std::uint64_t>(j, "seed");
  return c;
}

inline json to_json(const MlpConfig& c) {
  return {{"layer_widths", c.layer_widths}, {"learning_rate", c.learning_rate},
          {"dropout_rate", c.dropout_rate}, {"batch_size", c.batch_size}, {"epochs", c.epochs},
          {"use_batch_norm", c.use_batch_norm}, {"seed", c.seed}, {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2}, {"adam_epsilon", c.adam_epsilon}, {"bn_momentum", c.bn_momentum},
          {"bn_epsilon", c.bn_epsilon}};
}

inline MlpConfig mlp_config_from_json(const json& j) {
  MlpConfig c;
  c.layer_widths = detail::field<std::array<std::size_t, kHiddenLayers>>(j, "layer_widths");
  c.learning_rate = detail::field<double>(j, "learning_rate");
  c.dropout_rate = detail::field<double>(j, "dropout_rate");
  c.batch_size = detail::field<std::size_t>(j, "batch_size");
  c.epochs = detail::field<std::size_t>(j, "epochs");
  c.use_batch_norm = detail::field<bool>(j, "use_batch_norm");
  c.seed = detail::field<std::uint64_t>(j, "seed");
  c.adam_beta1 = detail::field<double>(j, "adam_beta1");
  c.adam_beta2 = detail::field<double>(j, "adam_beta2");
  c.adam_epsilon = detail::field<double>(j, "adam_epsilon");
  c.bn_momentum = detail::field<double>(j, "bn_momentum");
  c.bn_epsilon = detail::field<double>(j, "bn_epsilon");
  return c;
}

// --- models ------------------------------------------------------------------

// Trees are stored column-wise: one array per node field.
inline json to_json(const RegressionTree& t) {
  json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
       value = json::array(), weight = json::array(), gain = json::array();
  for (const auto& n : t.nodes()) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
    weight.push_back(n.weight);
    gain.push_back(n.gain);
  }
  return {{"width", t.width()}, {"feature", feature}, {"threshold", threshold}, {"left", left},
          {"right", right},     {"value", value},     {"weight", weight},       {"gain", gain}};
}

inline RegressionTree tree_from_json(const json& j) {
  const auto feature = detail::field<std::vector<int>>(j, "feature");
  const auto threshold = detail::field<std::vector<double>>(j, "threshold");
  const auto left = detail::field<std::vector<int>>(j, "left");
  const auto right = detail::field<std::vector<int>>(j, "right");
  const auto value = detail::field<std::vector<double>>(j, "value");
  const auto weight = detail::field<std::vector<double>>(j, "weight");
  const auto gain = detail::field<std::vector<double>>(j, "gain");
  const auto width = detail::field<std::size_t>(j, "width");
  const std::size_t n = feature.size();
  if (threshold.size() != n || left.size() != n || right.size() != n || value.size() != n || weight.size() != n ||
      gain.size() != n || n == 0)
    throw Error("cli", ErrorKind::schema, "malformed tree");
  std::vector<TreeNode> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i] = {feature[i], threshold[i], left[i], right[i], value[i], weight[i], gain[i]};
    if (!nodes[i].is_leaf()) {
      if (static_cast<std::size_t>(feature[i]) >= width || left[i] <= static_cast<int>(i) ||
          right[i] <= static_cast<int>(i) || static_cast<std::size_t>(left[i]) >= n ||
          static_cast<std::size_t>(right[i]) >= n)
        throw Error("cli", ErrorKind::schema, "malformed tree node " + std::to_string(i));
    }
  }
  return RegressionTree(std::move(nodes), width);
}

inline json to_json(const GravityModel& m) {
  return {{"params", to_json(m.params)}, {"variant", to_string(m.variant)},
          {"scaler", m.scaler ? to_json(*m.scaler) : json(nullptr)}};
}

inline json to_json(const RandomForest& m) {
  json trees = json::array();
  for (const auto& t : m.trees()) trees.push_back(to_json(t));
  return {{"width", m.input_width()}, {"config", to_json(m.config())}, {"trees", trees}};
}

inline json to_json(const BoostedTrees& m) {
  json trees = json::array();
  for (const auto& t : m.trees()) trees.push_back(to_json(t));
  return {{"width", m.input_width()}, {"config", to_json(m.config())}, {"base", m.base()},
          {"train_mse", m.train_mse()}, {"trees", trees}};
}

inline json to_json(const Mlp& m) {
  json running = json::array();
  for (std::size_t l = 0; l < kHiddenLayers; ++l) {
    const auto& mean = m.running_mean(l);
    const auto& var = m.running_var(l);
    running.push_back({{"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
                       {"var", std::vector<double>(var.data(), var.data() + var.size())}});
  }
  const auto p = m.parameters();
  return {{"width", m.input_width()},
          {"config", to_json(m.config())},
          {"parameters", std::vector<double>(p.begin(), p.end())},
          {"running_stats", running},
          {"epoch_losses", m.epoch_losses()}};
}

inline json to_json(const FittedModel& m) {
  json body = std::visit([](const auto& x) { return to_json(x); }, m);
  return {{"family", to_string(family(m))}, {"body", body}};
}

inline FittedModel model_from_json(const json& j) {
  const auto fam = parse_family(detail::field<std::string>(j, "family"));
  const json& b = j.at("body");
  switch (fam) {
    case ModelFamily::gravity: {
      std::optional<ScalerState> scaler;
      if (!b.at("scaler").is_null()) scaler = scaler_from_json(b.at("scaler"));
      return gravity_as_model(gravity_params_from_json(b.at("params")),
                              parse_variant(detail::field<std::string>(b, "variant")), std::move(scaler));
    }
    case ModelFamily::rf: {
      std::vector<RegressionTree> trees;
      for (const auto& t : b.at("trees")) trees.push_back(tree_from_json(t));
      if (trees.empty()) throw Error("cli", ErrorKind::schema, "forest has no trees");
      return RandomForest(forest_config_from_json(b.at("config")), std::move(trees),
                          detail::field<std::size_t>(b, "width"));
    }
    case ModelFamily::gbr: {
      std::vector<RegressionTree> trees;
      for (const auto& t : b.at("trees")) trees.push_back(tree_from_json(t));
      return BoostedTrees(boost_config_from_json(b.at("config")), detail::field<double>(b, "base"), std::move(trees),
                          detail::field<std::size_t>(b, "width"), detail::field<std::vector<double>>(b, "train_mse"));
    }
    case ModelFamily::mlp: {
      Mlp net(mlp_config_from_json(b.at("config")), detail::field<std::size_t>(b, "width"));
      const auto params = detail::field<std::vector<double>>(b, "parameters");
      auto dst = net.parameters();
      if (params.size() != dst.size())
        throw Error("cli", ErrorKind::schema,
                    "MLP parameter count " + std::to_string(params.size()) + " does not match layout " +
                        std::to_string(dst.size()));
      std::copy(params.begin(), params.end(), dst.begin());
      const auto& running = b.at("running_stats");
      if (running.size() != kHiddenLayers) throw Error("cli", ErrorKind::schema, "MLP running stats malformed");
      for (std::size_t l = 0; l < kHiddenLayers; ++l) {
        const auto mean = detail::field<std::vector<double>>(running[l], "mean");
        const auto var = detail::field<std::vector<double>>(running[l], "var");
        if (mean.size() != static_cast<std::size_t>(net.running_mean(l).size()) || var.size() != mean.size())
          throw Error("cli", ErrorKind::schema, "MLP running stats malformed");
        net.set_running_stats(l, Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size())),
                              Eigen::Map<const Eigen::VectorXd>(var.data(), static_cast<Eigen::Index>(var.size())));
      }
      net.set_epoch_losses(detail::field<std::vector<double>>(b, "epoch_losses"));
      return net;
    }
  }
  throw Error("cli", ErrorKind::schema, "unknown model family");
}

// --- search reports ----------------------------------------------------------

inline json to_json(const ParamPoint& p) {
  json j = json::object();
  for (const auto& [k, v] : p) j[k] = v;
  return j;
}

inline ParamPoint param_point_from_json(const json& j) {
  ParamPoint p;
  for (const auto& [k, v] : j.items()) p[k] = v.get<double>();
  return p;
}

inline json to_json(const SearchReport& r) {
  json trials = json::array();
  for (const auto& t : r.trials) {
    json folds = json::array();
    for (double v : t.fold_mae) folds.push_back(detail::number_or_null(v));
    trials.push_back({{"params", to_json(t.params)}, {"fold_mae", folds},
                      {"mean_mae", detail::number_or_null(t.mean_mae)}});
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "search_report"},
          {"family", to_string(r.family)},
          {"n_iter", r.n_iter},
          {"k", r.k},
          {"seed", r.seed},
          {"exhaustive", r.exhaustive},
          {"trials", trials},
          {"best_index", r.best_index},
          {"best_params", to_json(r.best_params)},
          {"best_score", detail::number_or_null(r.best_score)}};
}

inline SearchReport search_report_from_json(const json& j) {
  SearchReport r;
  r.family = parse_family(detail::field<std::string>(j, "family"));
  r.n_iter = detail::field<std::size_t>(j, "n_iter");
  r.k = detail::field<std::size_t>(j, "k");
  r.seed = detail::field<std::uint64_t>(j, "seed");
  r.exhaustive = detail::field<bool>(j, "exhaustive");
  for (const auto& t : j.at("trials")) {
    Trial trial;
    trial.params = param_point_from_json(t.at("params"));
    for (const auto& v : t.at("fold_mae")) trial.fold_mae.push_back(detail::number_or_inf(v));
    trial.mean_mae = detail::number_or_inf(t.at("mean_mae"));
    r.trials.push_back(std::move(trial));
  }
  r.best_index = detail::field<std::size_t>(j, "best_index");
  r.best_params = param_point_from_json(j.at("best_params"));
  r.best_score = detail::number_or_inf(j.at("best_score"));
  return r;
}

// --- model artifact ------------------------------------------------------------

/// A trained model plus everything needed to rebuild its evaluation rows.
struct ModelArtifact {
  FittedModel model;
  DatasetVariant variant = DatasetVariant::dataset1;
  std::optional<ScalerState> scaler;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  DayAggregation aggregation = DayAggregation::per_day;
  json diagnostics = json::object();
};

inline json to_json(const ModelArtifact& a) {
  return {{"schema_version", kSchemaVersion},
          {"kind", "model"},
          {"variant", to_string(a.variant)},
          {"seed", a.seed},
          {"test_fraction", a.test_fraction},
          {"aggregation", to_string(a.aggregation)},
          {"scaler", a.scaler ? to_json(*a.scaler) : json(nullptr)},
          {"diagnostics", a.diagnostics},
          {"model", to_json(a.model)}};
}

inline void require_schema_version(const json& j, const char* kind) {
  if (!j.is_object() || !j.contains("schema_version"))
    throw Error("cli", ErrorKind::schema, std::string(kind) + " file lacks schema_version");
  const int v = j.at("schema_version").get<int>();
  if (v != kSchemaVersion)
    throw Error("cli", ErrorKind::schema,
                "unsupported schema_version " + std::to_string(v) + " (expected " + std::to_string(kSchemaVersion) + ")");
  if (j.value("kind", std::string{}) != kind)
    throw Error("cli", ErrorKind::schema, std::string("file is not a ") + kind + " artifact");
}

inline ModelArtifact artifact_from_json(const json& j) {
  require_schema_version(j, "model");
  ModelArtifact a{model_from_json(j.at("model")), DatasetVariant::dataset1, std::nullopt};
  a.variant = parse_variant(detail::field<std::string>(j, "variant"));
  if (!j.at("scaler").is_null()) a.scaler = scaler_from_json(j.at("scaler"));
  a.seed = detail::field<std::uint64_t>(j, "seed");
  a.test_fraction = detail::field<double>(j, "test_fraction");
  a.aggregation = parse_aggregation(detail::field<std::string>(j, "aggregation"));
  a.diagnostics = j.at("diagnostics");
  if (input_width(a.model) != schema_width(a.variant))
    throw Error("cli", ErrorKind::schema, "model width does not match its dataset variant");
  return a;
}

// --- files -------------------------------------------------------------------

inline void write_json(const std::string& path, const json& j, int indent = -1) {
  csv::write_file(path, j.dump(indent) + "\n", "cli");
}

inline json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cli", ErrorKind::io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw Error("cli", ErrorKind::parse, path + ": " + e.what());
  }
}

}  // namespace tripgrav
