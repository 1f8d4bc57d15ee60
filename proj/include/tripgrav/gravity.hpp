#pragma once

// Generalized gravity model T = k * Po^lambda * Pd^alpha / d^beta and its
// log-linear least-squares calibration.

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tripgrav/core.hpp"
#include "tripgrav/ingestion.hpp"

namespace tripgrav {

inline double predict_gravity(const GravityParams& p, double p_origin, double p_dest, double distance) {
  if (!(p_origin > 0.0) || !(p_dest > 0.0) || !(distance > 0.0))
    throw Error("gravity", ErrorKind::domain, "populations and distance must be strictly positive");
  return p.k * std::pow(p_origin, p.lambda) * std::pow(p_dest, p.alpha) / std::pow(distance, p.beta);
}

struct GravityObservation {
  double p_origin = 0.0;
  double p_dest = 0.0;
  double distance = 0.0;
  double flow = 0.0;
};

struct GravityFit {
  GravityParams params;
  double r2_log = 0.0;          // in-sample R^2 of log flows
  double residual_mean = 0.0;   // mean log-space residual
  std::size_t rows_used = 0;
  std::size_t rows_dropped = 0;  // zero flows (when no log shift is set)
  bool used_pseudo_inverse = false;
};

struct CalibrationOptions {
  /// When > 0, fit log(T + log_shift) and keep zero flows.
  double log_shift = 0.0;
};

/// Ordinary least squares on log T = log k + lambda log Po + alpha log Pd - beta log d.
/// Regressors are centred before forming the normal equations; an SVD
/// pseudo-inverse is used if the Cholesky factorisation fails.
inline GravityFit calibrate_loglinear(std::span<const GravityObservation> rows, const CalibrationOptions& opt = {}) {
  static constexpr std::array<const char*, 3> kColumns{"log_origin_population", "log_dest_population",
                                                       "log_distance"};
  GravityFit fit;
  std::vector<std::array<double, 3>> design;
  std::vector<double> target;
  for (const auto& r : rows) {
    if (!(r.p_origin > 0.0) || !(r.p_dest > 0.0) || !(r.distance > 0.0))
      throw Error("gravity", ErrorKind::domain, "populations and distance must be strictly positive");
    if (r.flow < 0.0) throw Error("gravity", ErrorKind::domain, "negative observed flow");
    const double shifted = r.flow + opt.log_shift;
    if (!(shifted > 0.0)) {
      ++fit.rows_dropped;
      continue;
    }
    design.push_back({std::log(r.p_origin), std::log(r.p_dest), std::log(r.distance)});
    target.push_back(std::log(shifted));
  }
  fit.rows_used = target.size();
  if (fit.rows_used < 5)
    throw Error("gravity", ErrorKind::validation,
                "calibration needs at least 5 positive-flow rows, got " + std::to_string(fit.rows_used));

  const auto n = static_cast<Eigen::Index>(fit.rows_used);
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) X(i, j) = design[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    y(i) = target[static_cast<std::size_t>(i)];
  }
  const Eigen::RowVector3d x_mean = X.colwise().mean();
  const double y_mean = y.mean();
  Eigen::MatrixXd Xc = X.rowwise() - x_mean;
  Eigen::VectorXd yc = y.array() - y_mean;

  // A regressor with no spread is collinear with the intercept.
  for (int j = 0; j < 3; ++j) {
    const double scale = std::max(1.0, X.col(j).cwiseAbs().maxCoeff());
    if (Xc.col(j).cwiseAbs().maxCoeff() <= 1e-12 * scale)
      throw Error("gravity", ErrorKind::singular_fit,
                  std::string("column '") + kColumns[static_cast<std::size_t>(j)] +
                      "' is constant (collinear with the intercept)");
  }
  // General rank deficiency among the centred regressors.
  {
    Eigen::MatrixXd Xs = Xc;
    for (int j = 0; j < 3; ++j) Xs.col(j) /= Xs.col(j).norm();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Xs, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(2) <= 1e-10 * sv(0)) {
      Eigen::Index worst = 0;
      svd.matrixV().col(2).cwiseAbs().maxCoeff(&worst);
      throw Error("gravity", ErrorKind::singular_fit,
                  std::string("design is rank deficient; degenerate column '") +
                      kColumns[static_cast<std::size_t>(worst)] + "'");
    }
  }

  const Eigen::Matrix3d normal = Xc.transpose() * Xc;
  const Eigen::Vector3d rhs = Xc.transpose() * yc;
  Eigen::Vector3d coef;
  Eigen::LLT<Eigen::Matrix3d> llt(normal);
  if (llt.info() == Eigen::Success) {
    coef = llt.solve(rhs);
  }
  if (llt.info() != Eigen::Success || !coef.allFinite()) {
    coef = Xc.completeOrthogonalDecomposition().pseudoInverse() * yc;
    fit.used_pseudo_inverse = true;
  }
  const double intercept = y_mean - (x_mean * coef)(0);

  fit.params = {std::exp(intercept), coef(0), coef(1), -coef(2)};
  const Eigen::VectorXd residual = y - X * coef - Eigen::VectorXd::Constant(n, intercept);
  fit.residual_mean = residual.mean();
  const double ss_res = residual.squaredNorm();
  const double ss_tot = yc.squaredNorm();
  fit.r2_log = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

/// Gravity predictor behind the uniform model interface. Rows are read through
/// the variant's gravity layout; when a scaler is attached the inputs are
/// unscaled first and the predicted flow is mapped into target space.
struct GravityModel {
  GravityParams params;
  DatasetVariant variant = DatasetVariant::dataset1;
  std::optional<ScalerState> scaler;

  std::size_t input_width() const noexcept { return schema_width(variant); }

  double predict_row(std::span<const double> x) const {
    const auto layout = gravity_layout(variant);
    auto raw = [&](std::size_t j) { return scaler ? invert_feature(x[j], j, *scaler) : x[j]; };
    const double flow =
        predict_gravity(params, raw(layout.origin_population), raw(layout.dest_population), raw(layout.distance));
    return scaler ? transform_target(flow, *scaler) : flow;
  }

  std::vector<double> predict(const FeatureMatrix& m) const {
    if (m.cols != input_width())
      throw Error("gravity", ErrorKind::schema,
                  "row width " + std::to_string(m.cols) + " does not match " + std::string(to_string(variant)));
    std::vector<double> out(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) out[r] = predict_row(m.row(r));
    return out;
  }
};

/// Extracts raw (population, population, distance, flow) tuples from a dataset.
inline std::vector<GravityObservation> gravity_observations(const Dataset& ds) {
  if (ds.width() != schema_width(ds.variant))
    throw Error("gravity", ErrorKind::schema, "dataset lacks population fields");
  const auto layout = gravity_layout(ds.variant);
  std::vector<GravityObservation> out;
  out.reserve(ds.size());
  for (const auto& r : ds.records) {
    if (r.x.size() != ds.width()) throw Error("gravity", ErrorKind::schema, "row width mismatch");
    auto raw = [&](std::size_t j) { return ds.scaler ? invert_feature(r.x[j], j, *ds.scaler) : r.x[j]; };
    const double y = ds.scaler ? invert_target(r.y, *ds.scaler) : r.y;
    out.push_back({raw(layout.origin_population), raw(layout.dest_population), raw(layout.distance),
                   std::max(0.0, y)});
  }
  return out;
}

inline GravityModel gravity_as_model(const GravityParams& params, DatasetVariant variant,
                                     std::optional<ScalerState> scaler) {
  if (!params.valid()) throw Error("gravity", ErrorKind::validation, "invalid gravity parameters");
  return {params, variant, std::move(scaler)};
}

/// Calibrates on a (possibly scaled) training dataset and wraps the result.
inline std::pair<GravityModel, GravityFit> fit_gravity(const Dataset& train, const CalibrationOptions& opt = {}) {
  const auto obs = gravity_observations(train);
  auto fit = calibrate_loglinear(obs, opt);
  return {gravity_as_model(fit.params, train.variant, train.scaler), fit};
}

}  // namespace tripgrav
