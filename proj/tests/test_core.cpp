#include <gtest/gtest.h>

#include "tripgrav/core.hpp"

using namespace tripgrav;

TEST(SchemaWidth, Variants) {
  EXPECT_EQ(schema_width(DatasetVariant::dataset1), 4u);
  EXPECT_EQ(schema_width(DatasetVariant::dataset2), 56u);
}

TEST(DayType, CalendarFacts) {
  EXPECT_EQ(day_type("2021-03-15"), DayType::weekday);  // Monday
  EXPECT_EQ(day_type("2021-03-20"), DayType::weekend);  // Saturday
  EXPECT_EQ(day_type("2021-03-21"), DayType::weekend);  // Sunday
  EXPECT_EQ(day_type("2021-04-15"), DayType::weekday);  // Thursday
  EXPECT_EQ(day_type("2021-03-19"), DayType::weekday);  // Friday
}

TEST(DayType, InvalidDateIsParseError) {
  for (const char* bad : {"2021-02-30", "2021-13-01", "21-03-15", "2021/03/15", "", "2021-03-15x"}) {
    try {
      day_type(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::parse) << bad;
    }
  }
}

TEST(Date, FormatRoundTripAndArithmetic) {
  const auto d = parse_date("2021-03-15");
  EXPECT_EQ(format_date(d), "2021-03-15");
  EXPECT_EQ(format_date(add_days(d, 31)), "2021-04-15");
  EXPECT_EQ(format_date(add_days(parse_date("2020-02-28"), 1)), "2020-02-29");
}

TEST(Fips, Validation) {
  EXPECT_TRUE(is_valid_fips("47001"));
  EXPECT_FALSE(is_valid_fips("4700"));
  EXPECT_FALSE(is_valid_fips("470011"));
  EXPECT_FALSE(is_valid_fips("47a01"));
}

TEST(FeatureLabel, Dataset2Layout) {
  EXPECT_EQ(feature_label(DatasetVariant::dataset2, 0), "F1-O");
  EXPECT_EQ(feature_label(DatasetVariant::dataset2, 26), "F27-O");
  EXPECT_EQ(feature_label(DatasetVariant::dataset2, 27), "F1-D");
  EXPECT_EQ(feature_label(DatasetVariant::dataset2, 52), "F26-D");
  EXPECT_EQ(feature_label(DatasetVariant::dataset2, 53), "F27-D");
  EXPECT_EQ(feature_label(DatasetVariant::dataset2, 54), "Distance");
  EXPECT_EQ(feature_label(DatasetVariant::dataset2, 55), "Time");
}

TEST(FeatureLabel, Dataset1Layout) {
  EXPECT_EQ(feature_label(DatasetVariant::dataset1, 0), "F27-O");
  EXPECT_EQ(feature_label(DatasetVariant::dataset1, 1), "F27-D");
  EXPECT_EQ(feature_label(DatasetVariant::dataset1, 2), "Distance");
  EXPECT_EQ(feature_label(DatasetVariant::dataset1, 3), "Time");
}

TEST(GravityLayout, PopulationAndDistancePositions) {
  const auto d1 = gravity_layout(DatasetVariant::dataset1);
  EXPECT_EQ(d1.origin_population, 0u);
  EXPECT_EQ(d1.dest_population, 1u);
  EXPECT_EQ(d1.distance, 2u);
  const auto d2 = gravity_layout(DatasetVariant::dataset2);
  EXPECT_EQ(d2.origin_population, 26u);
  EXPECT_EQ(d2.dest_population, 53u);
  EXPECT_EQ(d2.distance, 54u);
  EXPECT_EQ(d2.time, 55u);
}

TEST(Variant, ParseRoundTrip) {
  EXPECT_EQ(parse_variant("dataset1"), DatasetVariant::dataset1);
  EXPECT_EQ(parse_variant(to_string(DatasetVariant::dataset2)), DatasetVariant::dataset2);
  EXPECT_THROW(parse_variant("dataset3"), Error);
}

TEST(GravityParams, Validity) {
  EXPECT_TRUE((GravityParams{1, 1, 1, 2}.valid()));
  EXPECT_FALSE((GravityParams{0, 1, 1, 2}.valid()));
  EXPECT_FALSE((GravityParams{1, std::nan(""), 1, 2}.valid()));
}

TEST(FeatureMatrix, RowMajorFromRecords) {
  std::vector<FeaturizedRecord> rows(2);
  rows[0].x = {1, 2, 3, 4};
  rows[1].x = {5, 6, 7, 8};
  rows[0].y = 0.5;
  rows[1].y = 0.25;
  const auto m = to_matrix(rows);
  EXPECT_EQ(m.rows, 2u);
  EXPECT_EQ(m.cols, 4u);
  EXPECT_EQ(m(1, 2), 7.0);
  EXPECT_EQ(targets(rows), (std::vector<double>{0.5, 0.25}));
}

TEST(Error, WhatIsModuleQualified) {
  const Error e("ingestion", ErrorKind::coverage, "missing (B,C)");
  EXPECT_STREQ(e.what(), "ingestion: coverage error: missing (B,C)");
  EXPECT_EQ(e.module(), "ingestion");
}
