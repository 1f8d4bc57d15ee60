#pragma once

// Uniform fit/predict surface over the four model families.

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tripgrav/boosting.hpp"
#include "tripgrav/forest.hpp"
#include "tripgrav/gravity.hpp"
#include "tripgrav/mlp.hpp"

namespace tripgrav {

enum class ModelFamily { gravity, rf, gbr, mlp };

inline constexpr std::string_view to_string(ModelFamily f) noexcept {
  switch (f) {
    case ModelFamily::gravity: return "gravity";
    case ModelFamily::rf: return "rf";
    case ModelFamily::gbr: return "gbr";
    case ModelFamily::mlp: return "mlp";
  }
  return "gravity";
}

inline ModelFamily parse_family(std::string_view s) {
  if (s == "gravity") return ModelFamily::gravity;
  if (s == "rf") return ModelFamily::rf;
  if (s == "gbr") return ModelFamily::gbr;
  if (s == "mlp") return ModelFamily::mlp;
  throw Error("ml_models", ErrorKind::validation, "unknown model family '" + std::string(s) + "'");
}

using FittedModel = std::variant<GravityModel, RandomForest, BoostedTrees, Mlp>;

inline ModelFamily family(const FittedModel& m) noexcept {
  return static_cast<ModelFamily>(m.index());
}

inline std::size_t input_width(const FittedModel& m) {
  return std::visit([](const auto& x) { return x.input_width(); }, m);
}

inline std::vector<double> predict(const FittedModel& m, const FeatureMatrix& rows) {
  return std::visit([&](const auto& x) { return x.predict(rows); }, m);
}

inline std::vector<double> predict(const FittedModel& m, std::span<const FeaturizedRecord> rows) {
  if (!rows.empty() && rows.front().x.size() != input_width(m))
    throw Error("ml_models", ErrorKind::schema,
                "row width " + std::to_string(rows.front().x.size()) + " does not match model width " +
                    std::to_string(input_width(m)));
  return predict(m, to_matrix(rows));
}

}  // namespace tripgrav
