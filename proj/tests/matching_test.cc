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
#include "momentkit/matching.h"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "gtest/gtest.h"
#include "momentkit/lengthcls.h"
#include "oracles.h"

namespace momentkit {
namespace {

std::vector<std::vector<double>> RandomIntMatrix(std::mt19937_64& rng,
                                                 size_t rows, size_t cols,
                                                 int lo, int hi) {
  std::uniform_int_distribution<int> u(lo, hi);
  std::vector<std::vector<double>> m(rows, std::vector<double>(cols));
  for (auto& row : m) {
    for (double& x : row) x = u(rng);
  }
  return m;
}

CostMatrix ToCostMatrix(const std::vector<std::vector<double>>& m) {
  CostMatrix c(m.size(), m.empty() ? 0 : m[0].size());
  for (size_t r = 0; r < c.rows(); ++r) {
    for (size_t k = 0; k < c.cols(); ++k) c.at(r, k) = m[r][k];
  }
  return c;
}

TEST(HungarianTest, SmallKnownInstance) {
  auto r = Hungarian(ToCostMatrix({{4, 1, 3}, {2, 0, 5}, {3, 2, 2}}));
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r->total_cost, 5);
  EXPECT_EQ(r->pairs, (std::vector<std::pair<int, int>>{{0, 1}, {1, 0}, {2, 2}}));
}

TEST(HungarianTest, MatchesBruteForceOnRandomRectangularMatrices) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> dim(1, 6);
  for (int t = 0; t < 500; ++t) {
    const size_t rows = dim(rng), cols = dim(rng);
    auto m = RandomIntMatrix(rng, rows, cols, -20, 20);
    auto r = Hungarian(ToCostMatrix(m));
    ASSERT_TRUE(r.ok());
    EXPECT_EQ(r->total_cost, oracle::BruteForceAssignment(m));
    EXPECT_EQ(r->pairs.size(), std::min(rows, cols));
    std::set<int> rs, cs;
    double recomputed = 0.0;
    for (auto [a, b] : r->pairs) {
      rs.insert(a);
      cs.insert(b);
      recomputed += m[a][b];
    }
    EXPECT_EQ(rs.size(), r->pairs.size());
    EXPECT_EQ(cs.size(), r->pairs.size());
    EXPECT_EQ(recomputed, r->total_cost);
  }
}

TEST(HungarianTest, TiesResolveToLexicographicallySmallestAssignment) {
  // Every permutation costs the same; the identity is lexicographically first.
  auto r = Hungarian(ToCostMatrix({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}}));
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r->pairs, (std::vector<std::pair<int, int>>{{0, 0}, {1, 1}, {2, 2}}));

  // Brute-force lexicographic optimum on random low-entropy matrices.
  std::mt19937_64 rng(9);
  for (int t = 0; t < 300; ++t) {
    const size_t n = 1 + t % 5;
    auto m = RandomIntMatrix(rng, n, n, 0, 2);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    const double best = oracle::BruteForceAssignment(m);
    std::vector<int> first;
    do {
      double total = 0.0;
      for (size_t i = 0; i < n; ++i) total += m[i][perm[i]];
      if (total == best) {
        first = perm;
        break;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    auto r = Hungarian(ToCostMatrix(m));
    ASSERT_TRUE(r.ok());
    for (size_t i = 0; i < n; ++i) EXPECT_EQ(r->pairs[i].second, first[i]);
  }
}

TEST(HungarianTest, RejectsNonFiniteAndHandlesEmpty) {
  CostMatrix c(2, 2, 0.0);
  c.at(1, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(Hungarian(c).ok());
  auto empty = Hungarian(CostMatrix(0, 3));
  ASSERT_TRUE(empty.ok());
  EXPECT_TRUE(empty->pairs.empty());
}

TEST(MatchCostTest, Formula) {
  const CostParams p;
  // Identical spans: L1 0, gIoU 1.
  EXPECT_DOUBLE_EQ(MatchCost({0.2, 0.4}, {0.2, 0.4}, 0.5, p), -1.0 - 2.0);
  // Disjoint: L1 = 0.4 + 0, gIoU = 0 - (0.6 - 0.4) / 0.6.
  EXPECT_NEAR(MatchCost({0.0, 0.2}, {0.4, 0.6}, 0.0, p),
              10 * 0.4 + 0.2 / 0.6, 1e-12);
}

// Cost computed without the library.
double OracleCost(const Span& gt, const Span& pred, double score,
                  const CostParams& p) {
  const double c1 = 0.5 * (gt.start + gt.end), c2 = 0.5 * (pred.start + pred.end);
  const double w1 = gt.end - gt.start, w2 = pred.end - pred.start;
  const double inter =
      std::max(0.0, std::min(gt.end, pred.end) - std::max(gt.start, pred.start));
  const double uni = w1 + w2 - inter;
  const double hull = std::max(gt.end, pred.end) - std::min(gt.start, pred.start);
  const double giou = inter / uni - (hull - uni) / hull;
  return p.w_l1 * (std::abs(c1 - c2) + std::abs(w1 - w2)) - p.w_giou * giou -
         p.w_conf * score;
}

struct Instance {
  double duration;
  LengthClassScheme scheme;
  int n_q;
  std::vector<Prediction> preds;
  std::vector<Span> gts;
};

Instance RandomInstance(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n_classes = 1 + static_cast<int>(u(rng) * 3);
  const int n_q = 1 + static_cast<int>(u(rng) * 4);
  std::vector<double> t;
  double edge = 0.0;
  for (int k = 0; k + 1 < n_classes; ++k) {
    edge += 10 + 20 * u(rng);
    t.push_back(edge);
  }
  t.push_back(std::numeric_limits<double>::infinity());
  Instance in{150.0, *LengthClassScheme::Create(t), n_q, {}, {}};
  for (int k = 0; k < n_classes; ++k) {
    for (int j = 0; j < n_q; ++j) {
      const double a = u(rng) * 140, len = 1 + u(rng) * 60;
      in.preds.push_back({{a, std::min(150.0, a + len)}, u(rng), k});
    }
  }
  // Per class at most n_q gts so that the instance is feasible.
  std::vector<int> per_class(n_classes, 0);
  const int n_gts = static_cast<int>(u(rng) * 5);
  for (int g = 0; g < n_gts; ++g) {
    const double len = 1 + u(rng) * 80;
    const double a = u(rng) * (150 - len);
    const int k = ClassOf(len, in.scheme);
    if (per_class[k] == n_q) continue;
    ++per_class[k];
    in.gts.push_back({a, a + len});
  }
  return in;
}

TEST(LengthwiseMatchTest, EqualsPerClassBruteForceAndNeverCrossesClasses) {
  std::mt19937_64 rng(2024);
  const CostParams params;
  for (int t = 0; t < 500; ++t) {
    Instance in = RandomInstance(rng);
    auto result = LengthwiseMatch(in.preds, in.gts, in.duration, in.scheme,
                                  in.n_q, params);
    ASSERT_TRUE(result.ok()) << result.status();
    ASSERT_EQ(result->size(), static_cast<size_t>(in.scheme.n_classes()));
    std::set<int> gts_seen;
    for (int k = 0; k < in.scheme.n_classes(); ++k) {
      std::vector<int> p_idx, g_idx;
      for (size_t i = 0; i < in.preds.size(); ++i) {
        if (*in.preds[i].class_slot == k) p_idx.push_back(i);
      }
      for (size_t g = 0; g < in.gts.size(); ++g) {
        if (ClassOf(in.gts[g].length(), in.scheme) == k) g_idx.push_back(g);
      }
      std::vector<std::vector<double>> m(g_idx.size(),
                                         std::vector<double>(p_idx.size()));
      auto norm = [&](const Span& s) {
        return Span{s.start / in.duration, s.end / in.duration};
      };
      for (size_t a = 0; a < g_idx.size(); ++a) {
        for (size_t b = 0; b < p_idx.size(); ++b) {
          const Prediction& p = in.preds[p_idx[b]];
          m[a][b] = OracleCost(norm(in.gts[g_idx[a]]), norm(p.span), p.score,
                               params);
        }
      }
      double got = 0.0;
      for (auto [pi, gi] : (*result)[k].pairs) {
        EXPECT_EQ(*in.preds[pi].class_slot, k);
        EXPECT_EQ(ClassOf(in.gts[gi].length(), in.scheme), k);
        EXPECT_TRUE(gts_seen.insert(gi).second);
        got += OracleCost(norm(in.gts[gi]), norm(in.preds[pi].span),
                          in.preds[pi].score, params);
      }
      EXPECT_EQ((*result)[k].pairs.size(), g_idx.size());
      EXPECT_NEAR(got, oracle::BruteForceAssignment(m), 1e-9);
    }
    EXPECT_EQ(gts_seen.size(), in.gts.size());
  }
}

TEST(LengthwiseMatchTest, CapacityExceededIsAnError) {
  auto scheme = *LengthClassScheme::Create({10, std::numeric_limits<double>::infinity()});
  std::vector<Prediction> preds = {{{0, 5}, 0.5, 0}, {{20, 40}, 0.5, 1}};
  std::vector<Span> gts = {{0, 4}, {10, 15}};
  auto r = LengthwiseMatch(preds, gts, 60, scheme, 1, {});
  EXPECT_EQ(r.status().code(), absl::StatusCode::kResourceExhausted);
}

TEST(LengthwiseMatchTest, ValidatesPredictionLayout) {
  auto scheme = *LengthClassScheme::Create({10, std::numeric_limits<double>::infinity()});
  std::vector<Prediction> preds = {{{0, 5}, 0.5, 0}, {{20, 40}, 0.5, 0}};
  EXPECT_FALSE(LengthwiseMatch(preds, {}, 60, scheme, 1, {}).ok());
  preds[1].class_slot.reset();
  EXPECT_FALSE(LengthwiseMatch(preds, {}, 60, scheme, 1, {}).ok());
  preds[1].class_slot = 1;
  preds[1].score = 1.5;
  EXPECT_FALSE(LengthwiseMatch(preds, {}, 60, scheme, 1, {}).ok());
}

TEST(LengthwiseMatchTest, GtOnlyReachesItsOwnClassSlot) {
  // Identical predictions everywhere, so only the class decides the pair.
  auto scheme = *PresetScheme("qvhighlights");
  std::vector<Prediction> preds;
  for (int k = 0; k < 4; ++k) preds.push_back({{0, 20}, 0.5, k});
  auto r = LengthwiseMatch(preds, std::vector<Span>{{0, 20}}, 150, scheme, 1, {});
  ASSERT_TRUE(r.ok());
  EXPECT_TRUE((*r)[0].pairs.empty());
  EXPECT_EQ((*r)[1].pairs, (std::vector<std::pair<int, int>>{{1, 0}}));
}

TEST(UnifiedMatchTest, SingleClassLengthwiseIsUnified) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto scheme = *LengthClassScheme::Create({std::numeric_limits<double>::infinity()});
  for (int t = 0; t < 200; ++t) {
    std::vector<Prediction> preds;
    for (int j = 0; j < 4; ++j) {
      const double a = u(rng) * 50;
      preds.push_back({{a, a + 1 + u(rng) * 9}, u(rng), 0});
    }
    std::vector<Span> gts;
    for (int g = 0; g < static_cast<int>(u(rng) * 4); ++g) {
      gts.push_back({g * 15.0, g * 15.0 + 1 + u(rng) * 10});
    }
    auto lw = LengthwiseMatch(preds, gts, 60, scheme, 4, {});
    auto un = UnifiedMatch(preds, gts, 60, {});
    ASSERT_TRUE(lw.ok() && un.ok());
    EXPECT_EQ((*lw)[0], *un);
  }
}

TEST(GroupwiseMatchTest, EachGroupMatchesEveryGt) {
  std::vector<Prediction> preds = {{{0, 5}, 0.9, 0}, {{30, 50}, 0.2, 0},
                                   {{0, 6}, 0.1, 1}, {{31, 49}, 0.8, 1}};
  std::vector<Span> gts = {{1, 5}, {30, 48}};
  auto r = GroupwiseMatch(preds, 2, gts, 60, {});
  ASSERT_TRUE(r.ok()) << r.status();
  ASSERT_EQ(r->size(), 2u);
  EXPECT_EQ((*r)[0].pairs, (std::vector<std::pair<int, int>>{{0, 0}, {1, 1}}));
  EXPECT_EQ((*r)[1].pairs, (std::vector<std::pair<int, int>>{{2, 0}, {3, 1}}));
}

}  // namespace
}  // namespace momentkit
