#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "tripgrav/tuning.hpp"

using namespace tripgrav;

namespace {

struct Problem {
  FeatureMatrix x;
  std::vector<double> y;
};

Problem problem(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Problem p{FeatureMatrix(n, 3), std::vector<double>(n)};
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < 3; ++c) p.x(r, c) = rng.uniform01();
    p.y[r] = std::sin(4 * p.x(r, 0)) + p.x(r, 1) + rng.normal(0, 0.1);
  }
  return p;
}

void expect_same_report(const SearchReport& a, const SearchReport& b) {
  ASSERT_EQ(a.trials.size(), b.trials.size());
  for (std::size_t t = 0; t < a.trials.size(); ++t) {
    EXPECT_EQ(a.trials[t].params, b.trials[t].params);
    EXPECT_EQ(a.trials[t].fold_mae, b.trials[t].fold_mae);
  }
  EXPECT_EQ(a.best_index, b.best_index);
  EXPECT_EQ(a.best_params, b.best_params);
  EXPECT_EQ(a.best_score, b.best_score);
}

}  // namespace

TEST(KFold, SizesPartitionAndDeterminism) {
  const auto f = kfold_indices(7, 3, 1);
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(f[0].size(), 3u);
  EXPECT_EQ(f[1].size(), 2u);
  EXPECT_EQ(f[2].size(), 2u);

  const auto g = kfold_indices(10, 5, 4);
  std::set<std::size_t> all;
  for (const auto& fold : g) {
    EXPECT_EQ(fold.size(), 2u);
    all.insert(fold.begin(), fold.end());
  }
  EXPECT_EQ(all.size(), 10u);
  EXPECT_EQ(*all.rbegin(), 9u);
  EXPECT_EQ(kfold_indices(10, 5, 4), g);
  EXPECT_NE(kfold_indices(10, 5, 5), g);
}

TEST(KFold, InvalidK) {
  EXPECT_THROW(kfold_indices(3, 4, 0), Error);
  EXPECT_THROW(kfold_indices(3, 1, 0), Error);
}

TEST(ParamSpace, SamplingRespectsDimensions) {
  const ParamSpace space{{Dimension::log_uniform("learning_rate", 1e-5, 1e-3),
                          Dimension::linear("dropout_rate", 0.1, 0.5),
                          Dimension::discrete("batch_size", {16, 32, 64})}};
  Rng rng(3);
  int below_1e4 = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto p = space.sample(rng);
    EXPECT_GE(p.at("learning_rate"), 1e-5);
    EXPECT_LE(p.at("learning_rate"), 1e-3);
    EXPECT_GE(p.at("dropout_rate"), 0.1);
    EXPECT_LT(p.at("dropout_rate"), 0.5);
    const double b = p.at("batch_size");
    EXPECT_TRUE(b == 16 || b == 32 || b == 64);
    below_1e4 += p.at("learning_rate") < 1e-4 ? 1 : 0;
  }
  // Log-uniform puts half the mass below the geometric midpoint 1e-4.
  EXPECT_NEAR(below_1e4 / 2000.0, 0.5, 0.05);
}

TEST(ParamSpace, Validation) {
  EXPECT_THROW(ParamSpace{}.validate(), Error);
  EXPECT_THROW((ParamSpace{{Dimension::linear("a", 1, 1)}}.validate()), Error);
  EXPECT_THROW((ParamSpace{{Dimension::log_uniform("a", 0, 1)}}.validate()), Error);
  EXPECT_THROW((ParamSpace{{Dimension::discrete("a", {})}}.validate()), Error);
  EXPECT_THROW((ParamSpace{{Dimension::linear("a", 0, 1)}}.enumerate()), Error);
}

TEST(ApplyParams, OverridesAndUnknownNames) {
  const auto rf = apply_params(ForestConfig{}, {{"n_estimators", 30}, {"max_depth", 0}, {"max_features", 0.5}});
  EXPECT_EQ(rf.n_estimators, 30u);
  EXPECT_EQ(rf.max_depth, -1);
  EXPECT_EQ(rf.max_features.resolve(10), 5u);
  const auto gb = apply_params(BoostConfig{}, {{"subsample", 0.7}, {"max_depth", 4}});
  EXPECT_EQ(gb.subsample, 0.7);
  EXPECT_EQ(gb.max_depth, 4);
  const auto mlp = apply_params(MlpConfig{}, {{"batch_size", 16}, {"dropout_rate", 0.3}});
  EXPECT_EQ(mlp.batch_size, 16u);
  EXPECT_THROW(apply_params(ForestConfig{}, {{"learning_rate", 0.1}}), Error);
}

TEST(RandomSearch, SinglePointSpace) {
  const auto p = problem(40, 1);
  const ParamSpace space{{Dimension::discrete("n_estimators", {5})}};
  SearchOptions opt;
  opt.n_iter = 1;
  opt.k = 2;
  opt.seed = 3;
  const auto rep = random_search(ModelFamily::rf, space, p.x, p.y, opt);
  ASSERT_EQ(rep.trials.size(), 1u);
  EXPECT_EQ(rep.best_params, (ParamPoint{{"n_estimators", 5}}));
  ASSERT_EQ(rep.trials[0].fold_mae.size(), 2u);
  EXPECT_DOUBLE_EQ(rep.best_score, (rep.trials[0].fold_mae[0] + rep.trials[0].fold_mae[1]) / 2.0);
}

// Exhaustive mode over a 6-point space against a hand-written loop that
// trains every configuration on the same folds and takes the first argmin.
TEST(RandomSearch, ExhaustiveMatchesOracle) {
  const auto p = problem(60, 2);
  const ParamSpace space{{Dimension::discrete("max_depth", {1, 2, 4}), Dimension::discrete("learning_rate", {0.1, 0.5})}};
  SearchOptions opt;
  opt.mode = SearchMode::exhaustive;
  opt.n_iter = 6;
  opt.k = 3;
  opt.seed = 11;
  opt.defaults.gbr.n_estimators = 10;
  const auto rep = random_search(ModelFamily::gbr, space, p.x, p.y, opt);

  const auto folds = kfold_indices(60, 3, derive_seed(11, kFoldStream));
  double best = std::numeric_limits<double>::infinity();
  ParamPoint best_point;
  for (double depth : {1.0, 2.0, 4.0}) {
    for (double lr : {0.1, 0.5}) {
      double total = 0;
      for (std::size_t f = 0; f < 3; ++f) {
        std::vector<char> held(60, 0);
        for (auto i : folds[f]) held[i] = 1;
        std::vector<std::vector<double>> tr;
        std::vector<double> ytr, yv;
        std::vector<std::size_t> vi;
        for (std::size_t r = 0; r < 60; ++r) {
          if (held[r]) {
            vi.push_back(r);
            yv.push_back(p.y[r]);
          } else {
            tr.push_back({p.x(r, 0), p.x(r, 1), p.x(r, 2)});
            ytr.push_back(p.y[r]);
          }
        }
        FeatureMatrix xt(tr.size(), 3);
        for (std::size_t r = 0; r < tr.size(); ++r)
          for (std::size_t c = 0; c < 3; ++c) xt(r, c) = tr[r][c];
        BoostConfig cfg;
        cfg.n_estimators = 10;
        cfg.max_depth = static_cast<int>(depth);
        cfg.learning_rate = lr;
        cfg.seed = derive_seed(11, kFitStream, f);
        const auto model = gbr_fit(xt, ytr, cfg);
        double err = 0;
        for (std::size_t j = 0; j < vi.size(); ++j) err += std::abs(model.predict_row(p.x.row(vi[j])) - yv[j]);
        total += err / static_cast<double>(vi.size());
      }
      const double mean = total / 3.0;
      if (mean < best) {
        best = mean;
        best_point = {{"max_depth", depth}, {"learning_rate", lr}};
      }
    }
  }
  EXPECT_EQ(rep.best_params, best_point);
  EXPECT_NEAR(rep.best_score, best, 1e-12);
  for (const auto& t : rep.trials) EXPECT_LE(rep.best_score, t.mean_mae);
}

TEST(RandomSearch, ExhaustiveNeedsSpaceCardinality) {
  const auto p = problem(20, 3);
  const ParamSpace space{{Dimension::discrete("max_depth", {1, 2})}};
  SearchOptions opt;
  opt.mode = SearchMode::exhaustive;
  opt.n_iter = 3;
  opt.k = 2;
  EXPECT_THROW(random_search(ModelFamily::gbr, space, p.x, p.y, opt), Error);
}

TEST(RandomSearch, PrefixConsistentAndReproducible) {
  const auto p = problem(50, 4);
  auto space = rf_preset().space;
  SearchOptions opt;
  opt.k = 2;
  opt.seed = 21;
  opt.defaults.rf.n_estimators = 3;
  space.dims[0] = Dimension::discrete("n_estimators", {2, 3, 4});
  opt.n_iter = 5;
  const auto long_run = random_search(ModelFamily::rf, space, p.x, p.y, opt);
  opt.n_iter = 3;
  const auto short_run = random_search(ModelFamily::rf, space, p.x, p.y, opt);
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_EQ(short_run.trials[t].params, long_run.trials[t].params);
    EXPECT_EQ(short_run.trials[t].fold_mae, long_run.trials[t].fold_mae);
  }
  opt.n_iter = 5;
  expect_same_report(long_run, random_search(ModelFamily::rf, space, p.x, p.y, opt));
}

TEST(RandomSearch, ParallelEqualsSerial) {
  const auto p = problem(50, 5);
  const ParamSpace space{{Dimension::discrete("n_estimators", {2, 4, 6}), Dimension::discrete("max_depth", {0, 3})}};
  SearchOptions opt;
  opt.n_iter = 6;
  opt.k = 3;
  opt.seed = 8;
  const auto serial = random_search(ModelFamily::rf, space, p.x, p.y, opt);
  opt.jobs = 4;
  expect_same_report(serial, random_search(ModelFamily::rf, space, p.x, p.y, opt));
}

TEST(RandomSearch, DivergedTrialScoresInfinity) {
  auto p = problem(40, 6);
  for (auto& v : p.x.values) v *= 1e150;
  for (auto& v : p.y) v *= 1e300;
  const ParamSpace space{{Dimension::discrete("learning_rate", {1e300})}};
  SearchOptions opt;
  opt.n_iter = 1;
  opt.k = 2;
  opt.defaults.mlp.epochs = 2;
  opt.defaults.mlp.use_batch_norm = false;
  opt.defaults.mlp.dropout_rate = 0.0;
  const auto rep = random_search(ModelFamily::mlp, space, p.x, p.y, opt);
  EXPECT_TRUE(std::isinf(rep.trials[0].mean_mae));
  EXPECT_TRUE(std::isinf(rep.best_score));
}

TEST(Presets, PresetTrialAndFoldCounts) {
  EXPECT_EQ(rf_preset().n_iter, 20u);
  EXPECT_EQ(rf_preset().k, 5u);
  EXPECT_EQ(gbr_preset().n_iter, 10u);
  EXPECT_EQ(gbr_preset().k, 2u);
  const auto mlp = mlp_preset().space;
  ASSERT_EQ(mlp.dims.size(), 3u);
  EXPECT_EQ(mlp.dims[0].kind, Dimension::Kind::log);
  EXPECT_EQ(mlp.dims[0].low, 1e-5);
  EXPECT_EQ(mlp.dims[0].high, 1e-3);
  EXPECT_EQ(mlp.dims[2].values, (std::vector<double>{16, 32, 64}));
  EXPECT_THROW(preset_for(ModelFamily::gravity), Error);
  const auto d = tuned_defaults();
  EXPECT_EQ(d.gbr.n_estimators, 500u);
  EXPECT_EQ(d.gbr.subsample, 0.9);
}
