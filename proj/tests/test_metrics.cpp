#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "tripgrav/metrics.hpp"
#include "tripgrav/rng.hpp"

using namespace tripgrav;
using Pair = std::pair<std::string, std::string>;

TEST(RSquared, Examples) {
  const std::vector<double> a{1, 2, 3};
  EXPECT_DOUBLE_EQ(r_squared(a, a), 1.0);
  EXPECT_DOUBLE_EQ(r_squared(a, std::vector<double>{2, 2, 2}), 0.0);
  EXPECT_DOUBLE_EQ(r_squared(a, std::vector<double>{1, 2, 4}), 0.5);
  EXPECT_LT(r_squared(a, std::vector<double>{3, 2, 1}), 0.0);
}

TEST(RSquared, Errors) {
  try {
    r_squared(std::vector<double>{4, 4, 4}, std::vector<double>{1, 2, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::undefined_metric);
  }
  EXPECT_THROW(r_squared(std::vector<double>{1}, std::vector<double>{1}), Error);
  EXPECT_THROW(r_squared(std::vector<double>{1, 2}, std::vector<double>{1}), Error);
}

TEST(RSquared, AffineInvariance) {
  Rng rng(1);
  std::vector<double> a(20), p(20), a2(20), p2(20);
  for (int i = 0; i < 20; ++i) {
    a[i] = rng.normal();
    p[i] = a[i] + rng.normal(0, 0.3);
    a2[i] = 3.5 * a[i] - 7;
    p2[i] = 3.5 * p[i] - 7;
  }
  EXPECT_NEAR(r_squared(a, p), r_squared(a2, p2), 1e-12);
}

TEST(Mae, Examples) {
  EXPECT_EQ(mae(std::vector<double>{0, 0}, std::vector<double>{1, -1}), 1.0);
  EXPECT_DOUBLE_EQ(mae(std::vector<double>{1, 2, 3}, std::vector<double>{2, 2, 5}), 1.0);
  EXPECT_EQ(mae(std::vector<double>{1, 2}, std::vector<double>{1, 2}), 0.0);
  EXPECT_THROW(mae(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST(Mae, TranslationInvariance) {
  const std::vector<double> a{1, 5, -2}, p{0, 6, 1}, a2{11, 15, 8}, p2{10, 16, 11};
  EXPECT_DOUBLE_EQ(mae(a, p), mae(a2, p2));
}

TEST(Cpc, Examples) {
  const std::map<Pair, double> g{{{"A", "B"}, 2}, {{"A", "C"}, 3}};
  const std::map<Pair, double> r{{{"A", "B"}, 1}, {{"A", "C"}, 5}};
  EXPECT_NEAR(cpc(g, r), 8.0 / 11.0, 1e-15);
  EXPECT_DOUBLE_EQ(cpc(g, g), 1.0);
  const std::map<Pair, double> other{{{"B", "A"}, 4}};
  EXPECT_EQ(cpc(g, other), 0.0);
}

TEST(Cpc, MissingPairsCountAsZero) {
  const std::map<Pair, double> g{{{"A", "B"}, 2}};
  const std::map<Pair, double> r{{{"A", "B"}, 2}, {{"A", "C"}, 2}};
  EXPECT_DOUBLE_EQ(cpc(g, r), 2.0 * 2 / 6.0);
}

TEST(Cpc, SymmetryScaleAndBounds) {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> a(15), b(15), ca(15), cb(15);
    for (int i = 0; i < 15; ++i) {
      a[i] = rng.uniform(0, 10);
      b[i] = rng.uniform(0, 10);
      ca[i] = 2.5 * a[i];
      cb[i] = 2.5 * b[i];
    }
    const double v = cpc(a, b);
    EXPECT_DOUBLE_EQ(v, cpc(b, a));
    EXPECT_NEAR(v, cpc(ca, cb), 1e-14);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Cpc, Errors) {
  try {
    cpc(std::vector<double>{0, 0}, std::vector<double>{0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::undefined_metric);
  }
  EXPECT_THROW(cpc(std::vector<double>{-1, 2}, std::vector<double>{1, 2}), Error);
}

TEST(GroupedMae, PerGroupMatchesSubsetMae) {
  const std::vector<std::string> g{"weekday", "weekend", "weekday", "weekend", "weekday"};
  const std::vector<double> a{1, 2, 3, 4, 5}, p{2, 2, 1, 7, 5};
  const auto out = grouped_mae(g, a, p);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_DOUBLE_EQ(out.at("weekday"), mae(std::vector<double>{1, 3, 5}, std::vector<double>{2, 1, 5}));
  EXPECT_DOUBLE_EQ(out.at("weekend"), mae(std::vector<double>{2, 4}, std::vector<double>{2, 7}));
  const std::vector<std::string> one(5, "all");
  EXPECT_DOUBLE_EQ(grouped_mae(one, a, p).at("all"), mae(a, p));
}
