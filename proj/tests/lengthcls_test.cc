// Copyright 2026 The MomentKit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "momentkit/lengthcls.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "gtest/gtest.h"
#include "json.hpp"
#include "oracles.h"

namespace momentkit {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(SchemeTest, PresetsCarryPublishedThresholds) {
  EXPECT_EQ(PresetScheme("qvhighlights")->thresholds(),
            (std::vector<double>{12, 36, 65, kInf}));
  EXPECT_EQ(PresetScheme("charades-sta")->thresholds(),
            (std::vector<double>{5.67, 14, kInf}));
  EXPECT_EQ(PresetScheme("tacos")->thresholds(),
            (std::vector<double>{10, 19, 38, kInf}));
  EXPECT_EQ(PresetScheme("fixed")->thresholds(),
            (std::vector<double>{10, 30, 70, kInf}));
  EXPECT_EQ(PresetScheme("nope").status().code(), absl::StatusCode::kNotFound);
}

TEST(SchemeTest, CreateValidates) {
  EXPECT_FALSE(LengthClassScheme::Create({}).ok());
  EXPECT_FALSE(LengthClassScheme::Create({10, 30}).ok());
  EXPECT_FALSE(LengthClassScheme::Create({30, 10, kInf}).ok());
  EXPECT_FALSE(LengthClassScheme::Create({10, 10, kInf}).ok());
  EXPECT_FALSE(LengthClassScheme::Create({-1, kInf}).ok());
  EXPECT_TRUE(LengthClassScheme::Create({kInf}).ok());
}

TEST(SchemeTest, ClassBoundariesAreUpperInclusive) {
  auto s = *PresetScheme("qvhighlights");
  EXPECT_EQ(ClassOf(0.5, s), 0);
  EXPECT_EQ(ClassOf(12, s), 0);
  EXPECT_EQ(ClassOf(12.0001, s), 1);
  EXPECT_EQ(ClassOf(36, s), 1);
  EXPECT_EQ(ClassOf(65, s), 2);
  EXPECT_EQ(ClassOf(150, s), 3);
  auto fixed = *PresetScheme("fixed");
  EXPECT_EQ(ClassOf(10, fixed), 0);
  EXPECT_TRUE(fixed.Contains(1, 10.5));
}

TEST(SchemeTest, ClassOfPartitionsThePositiveLine) {
  auto s = *PresetScheme("tacos");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 200.0);
  for (int i = 0; i < 1000; ++i) {
    const double d = u(rng) + 1e-9;
    int hits = 0;
    for (int k = 0; k < s.n_classes(); ++k) hits += s.Contains(k, d) ? 1 : 0;
    EXPECT_EQ(hits, 1);
    EXPECT_TRUE(s.Contains(ClassOf(d, s), d));
  }
}

TEST(CurveTest, RunningMeanOverLengthOrder) {
  std::vector<CurvePoint> pts = {{30, 0.2}, {10, 1.0}, {20, 0.6}, {20, 0.0}};
  auto c = CumulativeCurve(pts);
  ASSERT_TRUE(c.ok());
  // Sorted: 10:1.0, 20:0.6, 20:0.0, 30:0.2; ties collapse to the later mean.
  ASSERT_EQ(c->points.size(), 3u);
  EXPECT_DOUBLE_EQ(c->points[0].score, 1.0);
  EXPECT_DOUBLE_EQ(c->points[1].score, (1.0 + 0.6 + 0.0) / 3);
  EXPECT_DOUBLE_EQ(c->points[2].score, (1.0 + 0.6 + 0.0 + 0.2) / 4);
}

TEST(CurveTest, MatchesPrefixMeanOracle) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<CurvePoint> pts;
  for (int i = 0; i < 200; ++i) pts.push_back({1 + 100 * u(rng), u(rng)});
  auto c = CumulativeCurve(pts);
  ASSERT_TRUE(c.ok());
  ASSERT_EQ(c->points.size(), pts.size());
  for (const CurvePoint& q : c->points) {
    double sum = 0.0;
    int n = 0;
    for (const CurvePoint& p : pts) {
      if (p.length <= q.length) {
        sum += p.score;
        ++n;
      }
    }
    EXPECT_NEAR(q.score, sum / n, 1e-12);
  }
}

TEST(CurveTest, RejectsBadInput) {
  EXPECT_FALSE(CumulativeCurve({}).ok());
  std::vector<CurvePoint> bad = {{0, 0.5}};
  EXPECT_FALSE(CumulativeCurve(bad).ok());
  bad = {{3, 1.5}};
  EXPECT_FALSE(CumulativeCurve(bad).ok());
}

TEST(InflectionTest, FindsTheSingleCurvatureChange) {
  // Convex then concave: y = (x - 20)^3.
  QualityCurve c;
  for (int x = 1; x <= 40; ++x) c.points.push_back({double(x), std::pow(x - 20.0, 3)});
  auto infl = DetectInflections(c, 1);
  ASSERT_TRUE(infl.ok());
  ASSERT_EQ(infl->size(), 1u);
  EXPECT_NEAR((*infl)[0], 20.0, 1.0);
}

TEST(InflectionTest, StraightLineHasNone) {
  QualityCurve c;
  for (int x = 1; x <= 20; ++x) c.points.push_back({double(x), 0.1 * x});
  auto infl = DetectInflections(c, 3);
  ASSERT_TRUE(infl.ok());
  EXPECT_TRUE(infl->empty());
}

TEST(InflectionTest, Validation) {
  QualityCurve c;
  for (int x = 1; x <= 5; ++x) c.points.push_back({double(x), 0.1 * x});
  EXPECT_FALSE(DetectInflections(c, 2).ok());
  EXPECT_FALSE(DetectInflections(c, 3).ok());
}

TEST(KMeansTest, KnownCenters) {
  std::vector<double> pts = {10, 12, 14, 34, 36, 64, 66};
  auto c = KMeans1d(pts, 3);
  ASSERT_TRUE(c.ok());
  EXPECT_EQ(*c, (std::vector<double>{12, 35, 65}));
}

TEST(KMeansTest, OutputIsSortedAndOrderFree) {
  std::vector<double> pts = {66, 10, 36, 14, 64, 12, 34};
  auto c = KMeans1d(pts, 3);
  ASSERT_TRUE(c.ok());
  EXPECT_EQ(*c, (std::vector<double>{12, 35, 65}));
  EXPECT_FALSE(KMeans1d(pts, 0).ok());
  EXPECT_FALSE(KMeans1d(pts, 8).ok());
}

TEST(KMeansTest, BundledFixturesEqualExhaustiveOptimum) {
  std::ifstream in(MOMENTKIT_TEST_DATA_DIR "/kmeans_fixtures.json");
  ASSERT_TRUE(in.good());
  const auto fixtures = nlohmann::json::parse(in);
  ASSERT_FALSE(fixtures.empty());
  for (const auto& f : fixtures) {
    const auto pts = f["points"].get<std::vector<double>>();
    const int k = f["k"];
    auto got = KMeans1d(pts, k);
    ASSERT_TRUE(got.ok()) << f["name"];
    EXPECT_EQ(*got, oracle::ExhaustiveKMeans1d(pts, k)) << f["name"];
  }
}

TEST(DeriveSchemeTest, CentersBecomeThresholds) {
  auto s = SchemeFromCenters(std::vector<double>{12, 35, 65});
  ASSERT_TRUE(s.ok());
  EXPECT_EQ(s->thresholds(), (std::vector<double>{12, 35, 65, kInf}));
  EXPECT_FALSE(SchemeFromCenters(std::vector<double>{35, 12}).ok());
}

TEST(DeriveSchemeTest, EndToEndOnAWavyCurve) {
  // Scores oscillate with length so that the running mean bends repeatedly.
  std::vector<CurvePoint> pts;
  for (int i = 1; i <= 120; ++i) {
    const double len = i;
    pts.push_back({len, 0.5 + 0.4 * std::sin(len / 6.0)});
  }
  auto s = DeriveScheme(pts, 3, 3);
  ASSERT_TRUE(s.ok()) << s.status();
  EXPECT_EQ(s->n_classes(), 3);
  EXPECT_LT(s->thresholds()[0], s->thresholds()[1]);
  EXPECT_FALSE(DeriveScheme(pts, 1, 3).ok());
}

}  // namespace
}  // namespace momentkit
