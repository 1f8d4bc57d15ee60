#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "tripgrav/boosting.hpp"
#include "tripgrav/forest.hpp"
#include "tripgrav/tree.hpp"

using namespace tripgrav;

namespace {

FeatureMatrix matrix(const std::vector<std::vector<double>>& rows) {
  FeatureMatrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < m.cols; ++c) m(r, c) = rows[r][c];
  return m;
}

struct Problem {
  FeatureMatrix x;
  std::vector<double> y;
};

Problem random_problem(std::size_t n, std::size_t p, std::uint64_t seed, double noise = 0.05) {
  Rng rng(seed);
  Problem pr{FeatureMatrix(n, p), std::vector<double>(n)};
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < p; ++c) pr.x(r, c) = rng.uniform01();
    pr.y[r] = std::sin(3 * pr.x(r, 0)) + (p > 1 ? pr.x(r, 1) * pr.x(r, 1) : 0.0) + rng.normal(0, noise);
  }
  return pr;
}

double mse(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

// Exhaustive best single split by SSE reduction; the oracle for the root split.
struct Stump {
  std::size_t feature = 0;
  double threshold = 0;
  double gain = -1;
};

Stump brute_force_stump(const FeatureMatrix& x, const std::vector<double>& y) {
  Stump best;
  const double n = static_cast<double>(y.size());
  const double total = std::accumulate(y.begin(), y.end(), 0.0);
  for (std::size_t c = 0; c < x.cols; ++c) {
    std::vector<double> vals;
    for (std::size_t r = 0; r < x.rows; ++r) vals.push_back(x(r, c));
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
      const double t = (vals[i] + vals[i + 1]) / 2;
      double sl = 0, nl = 0;
      for (std::size_t r = 0; r < x.rows; ++r)
        if (x(r, c) <= t) sl += y[r], nl += 1;
      const double sr = total - sl, nr = n - nl;
      const double gain = sl * sl / nl + sr * sr / nr - total * total / n;
      if (gain > best.gain + 1e-12) best = {c, t, gain};
    }
  }
  return best;
}

}  // namespace

TEST(Tree, SplitsAtMidpoint) {
  const auto x = matrix({{0}, {1}, {0}, {1}});
  const std::vector<double> y{0, 1, 0, 1};
  Rng rng(1);
  const auto t = fit_tree(x, y, {}, rng);
  ASSERT_FALSE(t.nodes()[0].is_leaf());
  EXPECT_EQ(t.nodes()[0].feature, 0);
  EXPECT_DOUBLE_EQ(t.nodes()[0].threshold, 0.5);
  const double a[] = {0.2}, b[] = {0.8};
  EXPECT_EQ(t.predict_row(a), 0.0);
  EXPECT_EQ(t.predict_row(b), 1.0);
  EXPECT_EQ(t.depth(), 1);
}

TEST(Tree, RootMatchesBruteForce) {
  const auto pr = random_problem(60, 3, 2);
  TreeParams params;
  params.max_depth = 1;
  Rng rng(2);
  const auto t = fit_tree(pr.x, pr.y, params, rng);
  const auto oracle = brute_force_stump(pr.x, pr.y);
  EXPECT_EQ(static_cast<std::size_t>(t.nodes()[0].feature), oracle.feature);
  EXPECT_NEAR(t.nodes()[0].threshold, oracle.threshold, 1e-12);
  EXPECT_NEAR(t.nodes()[0].gain, oracle.gain, 1e-9);
}

TEST(Tree, ConstantTargetIsSingleLeaf) {
  const auto pr = random_problem(30, 2, 3);
  const std::vector<double> y(30, 4.25);
  Rng rng(3);
  const auto t = fit_tree(pr.x, y, {}, rng);
  EXPECT_EQ(t.nodes().size(), 1u);
  EXPECT_EQ(t.nodes()[0].value, 4.25);
}

TEST(Tree, DepthZeroPredictsMean) {
  const auto pr = random_problem(40, 2, 4);
  TreeParams params;
  params.max_depth = 0;
  Rng rng(4);
  const auto t = fit_tree(pr.x, pr.y, params, rng);
  ASSERT_EQ(t.nodes().size(), 1u);
  EXPECT_NEAR(t.nodes()[0].value, std::accumulate(pr.y.begin(), pr.y.end(), 0.0) / 40.0, 1e-12);
}

TEST(Tree, DepthAndLeafLimitsRespected) {
  const auto pr = random_problem(200, 3, 5);
  TreeParams params;
  params.max_depth = 3;
  params.min_samples_leaf = 7;
  Rng rng(5);
  const auto t = fit_tree(pr.x, pr.y, params, rng);
  EXPECT_LE(t.depth(), 3);
  for (const auto& n : t.nodes())
    if (n.is_leaf()) EXPECT_GE(n.weight, 7.0);
}

TEST(Tree, WeightsEqualExpandedResample) {
  const auto pr = random_problem(25, 2, 6);
  std::vector<double> w(25);
  Rng wr(6);
  for (auto& v : w) v = static_cast<double>(wr.below(3));
  std::vector<std::vector<double>> rows;
  std::vector<double> ye;
  for (std::size_t r = 0; r < 25; ++r)
    for (int k = 0; k < int(w[r]); ++k) {
      rows.push_back({pr.x(r, 0), pr.x(r, 1)});
      ye.push_back(pr.y[r]);
    }
  Rng r1(1), r2(1);
  const auto weighted = fit_tree(presort(pr.x), pr.y, w, {}, r1);
  const auto expanded = fit_tree(matrix(rows), ye, {}, r2);
  for (std::size_t r = 0; r < 25; ++r)
    EXPECT_NEAR(weighted.predict_row(pr.x.row(r)), expanded.predict_row(pr.x.row(r)), 1e-12);
}

TEST(Forest, SingleTreeWithoutBootstrapEqualsFitTree) {
  const auto pr = random_problem(80, 3, 7);
  ForestConfig cfg;
  cfg.n_estimators = 1;
  cfg.bootstrap = false;
  const auto forest = rf_fit(pr.x, pr.y, cfg);
  Rng rng(99);
  const auto tree = fit_tree(pr.x, pr.y, {}, rng);
  for (std::size_t r = 0; r < pr.x.rows; ++r)
    EXPECT_EQ(forest.predict_row(pr.x.row(r)), tree.predict_row(pr.x.row(r)));
}

TEST(Forest, DeterministicAcrossJobs) {
  const auto pr = random_problem(120, 4, 8);
  ForestConfig cfg;
  cfg.n_estimators = 16;
  cfg.max_features = MaxFeatures::from_code(0);
  cfg.seed = 5;
  const auto a = rf_fit(pr.x, pr.y, cfg, 1).predict(pr.x);
  const auto b = rf_fit(pr.x, pr.y, cfg, 4).predict(pr.x);
  EXPECT_EQ(a, b);
  cfg.seed = 6;
  EXPECT_NE(a, rf_fit(pr.x, pr.y, cfg, 1).predict(pr.x));
}

TEST(Forest, LearnsIdentity) {
  Rng rng(9);
  FeatureMatrix x(200, 1);
  std::vector<double> y(200);
  for (std::size_t r = 0; r < 200; ++r) y[r] = x(r, 0) = rng.uniform01();
  ForestConfig cfg;
  cfg.n_estimators = 50;
  cfg.max_depth = 8;
  const auto pred = rf_fit(x, y, cfg).predict(x);
  double mae = 0;
  for (std::size_t r = 0; r < 200; ++r) mae += std::abs(pred[r] - y[r]);
  EXPECT_LT(mae / 200, 0.05);
}

TEST(Forest, PredictionIsMeanOfTrees) {
  const auto pr = random_problem(60, 3, 17);
  ForestConfig cfg;
  cfg.n_estimators = 7;
  const auto f = rf_fit(pr.x, pr.y, cfg);
  for (std::size_t r = 0; r < 60; ++r) {
    double s = 0;
    for (const auto& t : f.trees()) s += t.predict_row(pr.x.row(r));
    EXPECT_NEAR(f.predict_row(pr.x.row(r)), s / 7.0, 1e-12);
  }
}

TEST(Forest, PredictionsWithinTrainingRange) {
  const auto pr = random_problem(100, 3, 10, 0.5);
  ForestConfig cfg;
  cfg.n_estimators = 20;
  const auto f = rf_fit(pr.x, pr.y, cfg);
  const auto test = random_problem(100, 3, 11);
  const auto [lo, hi] = std::minmax_element(pr.y.begin(), pr.y.end());
  for (double v : f.predict(test.x)) {
    EXPECT_GE(v, *lo);
    EXPECT_LE(v, *hi);
  }
}

TEST(Forest, MoreTreesReduceTestError) {
  double one = 0, hundred = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto train = random_problem(150, 3, 100 + s, 0.3);
    const auto test = random_problem(300, 3, 200 + s, 0.0);
    ForestConfig cfg;
    cfg.seed = s;
    cfg.n_estimators = 1;
    one += mse(rf_fit(train.x, train.y, cfg).predict(test.x), test.y);
    cfg.n_estimators = 100;
    hundred += mse(rf_fit(train.x, train.y, cfg).predict(test.x), test.y);
  }
  EXPECT_LT(hundred, one);
}

TEST(Forest, WidthMismatchAndConfigErrors) {
  const auto pr = random_problem(20, 3, 12);
  ForestConfig cfg;
  cfg.n_estimators = 2;
  const auto f = rf_fit(pr.x, pr.y, cfg);
  EXPECT_THROW(f.predict(FeatureMatrix(2, 2)), Error);
  cfg.n_estimators = 0;
  EXPECT_THROW(rf_fit(pr.x, pr.y, cfg), Error);
}

TEST(MaxFeatures, Resolution) {
  EXPECT_EQ(MaxFeatures::from_code(0).resolve(56), 7u);
  EXPECT_EQ(MaxFeatures::from_code(1).resolve(56), 56u);
  EXPECT_EQ(MaxFeatures::from_code(0.5).resolve(56), 28u);
  EXPECT_EQ(MaxFeatures::from_code(0.33).resolve(4), 1u);
  EXPECT_EQ(MaxFeatures::from_code(3).resolve(4), 3u);
  EXPECT_EQ(MaxFeatures::from_code(9).resolve(4), 4u);
  EXPECT_THROW(MaxFeatures::from_code(-1), Error);
}

TEST(Boosting, ZeroEstimatorsPredictsMean) {
  const auto pr = random_problem(30, 2, 13);
  BoostConfig cfg;
  cfg.n_estimators = 0;
  const auto m = gbr_fit(pr.x, pr.y, cfg);
  const double mean = std::accumulate(pr.y.begin(), pr.y.end(), 0.0) / 30.0;
  for (double v : m.predict(pr.x)) EXPECT_NEAR(v, mean, 1e-12);
}

TEST(Boosting, TrainingMseNonIncreasingWithoutSubsampling) {
  const auto pr = random_problem(150, 3, 14);
  BoostConfig cfg;
  cfg.n_estimators = 60;
  const auto m = gbr_fit(pr.x, pr.y, cfg);
  const auto& curve = m.train_mse();
  ASSERT_EQ(curve.size(), 61u);
  for (std::size_t s = 1; s < curve.size(); ++s) EXPECT_LE(curve[s], curve[s - 1] + 1e-15);
  EXPECT_NEAR(curve.back(), mse(m.predict(pr.x), pr.y), 1e-12);
}

TEST(Boosting, UnitRateDeepTreesInterpolateTinyData) {
  const auto x = matrix({{0}, {1}, {2}, {3}, {4}});
  const std::vector<double> y{3, -1, 4, 1, 5};
  BoostConfig cfg;
  cfg.n_estimators = 3;
  cfg.learning_rate = 1.0;
  cfg.max_depth = 10;
  cfg.min_samples_leaf = 1;
  const auto m = gbr_fit(x, y, cfg);
  EXPECT_LT(m.train_mse()[1], 1e-20);
  const auto pred = m.predict(x);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(pred[i], y[i], 1e-12);
}

TEST(Boosting, StagedPredictionsMatchManualSum) {
  const auto pr = random_problem(50, 2, 15);
  BoostConfig cfg;
  cfg.n_estimators = 5;
  cfg.learning_rate = 0.3;
  cfg.subsample = 0.8;
  cfg.seed = 2;
  const auto m = gbr_fit(pr.x, pr.y, cfg);
  const auto staged = m.staged_predict(pr.x);
  ASSERT_EQ(staged.size(), 6u);
  for (std::size_t r = 0; r < 50; ++r) {
    double f = m.base();
    for (const auto& t : m.trees()) f += 0.3 * t.predict_row(pr.x.row(r));
    EXPECT_NEAR(staged.back()[r], f, 1e-12);
  }
  EXPECT_EQ(gbr_fit(pr.x, pr.y, cfg).predict(pr.x), m.predict(pr.x));
}

TEST(Boosting, InvalidConfigRejected) {
  const auto pr = random_problem(10, 1, 16);
  BoostConfig cfg;
  cfg.subsample = 0;
  EXPECT_THROW(gbr_fit(pr.x, pr.y, cfg), Error);
  cfg.subsample = 1;
  cfg.learning_rate = 0;
  EXPECT_THROW(gbr_fit(pr.x, pr.y, cfg), Error);
}
