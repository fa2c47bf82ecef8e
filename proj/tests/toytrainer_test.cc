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
#include "momentkit/toytrainer.h"

#include <cmath>
#include <limits>
#include <random>

#include "gtest/gtest.h"
#include "oracles.h"

namespace momentkit {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

LengthClassScheme ThreeClass() { return *LengthClassScheme::Create({10, 30, kInf}); }
LengthClassScheme OneClass() { return *LengthClassScheme::Create({kInf}); }

SyntheticSpec FixtureSpec(uint64_t seed, int n = 500) {
  SyntheticSpec s;
  s.n_samples = n;
  s.duration = 60;
  s.class_ranges = {{2, 8}, {12, 25}, {35, 55}};
  s.gts_min = 1;
  s.gts_max = 1;
  s.seed = seed;
  return s;
}

TEST(StrategyTest, ParseAndName) {
  for (auto s : {MatchStrategy::kLengthwise, MatchStrategy::kUnified,
                 MatchStrategy::kGroupwise}) {
    EXPECT_EQ(*ParseMatchStrategy(MatchStrategyName(s)), s);
  }
  EXPECT_FALSE(ParseMatchStrategy("hungarian").ok());
}

TEST(BankTest, UniformLayoutAndClamp) {
  auto bank = UniformQueryBank(ThreeClass(), 2, 0.1);
  ASSERT_TRUE(bank.ok());
  ASSERT_EQ(bank->slots.size(), 6u);
  EXPECT_DOUBLE_EQ(bank->slots[0].center, 0.25);
  EXPECT_DOUBLE_EQ(bank->slots[1].center, 0.75);
  EXPECT_EQ(bank->class_of_slot(3), 1);
  bank->slots[0] = {-1, 5, 100};
  ClampBank(*bank);
  EXPECT_EQ(bank->slots[0].center, 0.0);
  EXPECT_EQ(bank->slots[0].width, 1.0);
  EXPECT_EQ(bank->slots[0].conf_logit, kMaxLogit);
  EXPECT_FALSE(UniformQueryBank(ThreeClass(), 0, 0.1).ok());
  EXPECT_FALSE(UniformQueryBank(ThreeClass(), 1, 0.0).ok());
}

TEST(SyntheticTest, LengthsFollowRangesAndSeedsAreStable) {
  auto a = GenerateSynthetic(FixtureSpec(3, 300));
  auto b = GenerateSynthetic(FixtureSpec(3, 300));
  ASSERT_TRUE(a.ok() && b.ok());
  ASSERT_EQ(a->size(), 300u);
  const auto spec = FixtureSpec(3);
  for (size_t i = 0; i < a->size(); ++i) {
    const SyntheticSample& s = (*a)[i];
    ASSERT_EQ(s.gts.size(), 1u);
    const auto [lo, hi] = spec.class_ranges[s.classes[0]];
    EXPECT_GE(s.gts[0].length(), lo);
    EXPECT_LE(s.gts[0].length(), hi);
    EXPECT_GE(s.gts[0].start, 0.0);
    EXPECT_LE(s.gts[0].end, 60.0);
    EXPECT_EQ(s.gts, (*b)[i].gts);
  }
}

TEST(SyntheticTest, TightSpecFallsBackToFewerDisjointGts) {
  SyntheticSpec s;
  s.n_samples = 100;
  s.duration = 20;
  s.class_ranges = {{6, 9}};
  s.gts_min = 3;
  s.gts_max = 3;
  auto d = GenerateSynthetic(s);
  ASSERT_TRUE(d.ok());
  for (const auto& x : *d) {
    EXPECT_LE(x.gts.size(), 3u);
    EXPECT_GE(x.gts.size(), 1u);
    for (size_t i = 1; i < x.gts.size(); ++i) {
      EXPECT_LE(x.gts[i - 1].end, x.gts[i].start);
    }
  }
}

TEST(SyntheticTest, Validation) {
  SyntheticSpec s = FixtureSpec(1);
  s.class_ranges.push_back({50, 70});
  EXPECT_FALSE(GenerateSynthetic(s).ok());
  s = FixtureSpec(1);
  s.gts_min = 0;
  EXPECT_FALSE(GenerateSynthetic(s).ok());
  s = FixtureSpec(1);
  EXPECT_TRUE(CheckRangesAgainstScheme(s, ThreeClass()).ok());
  s.class_ranges = {{5, 15}};
  EXPECT_FALSE(CheckRangesAgainstScheme(s, ThreeClass()).ok());
}

TEST(LossTest, PerfectFitHasNoSpanLoss) {
  QueryBank bank{OneClass(), 1, {{0.5, 0.2, kMaxLogit}}};
  SyntheticSample s{60, {{24, 36}}, {0}};
  TrainConfig config;
  const LossAndGrad lg = MatchedLoss(bank, s, std::vector<std::pair<int, int>>{{0, 0}}, config);
  // Only the BCE term at logit 30 remains.
  EXPECT_LT(lg.loss, 1e-12);
  EXPECT_NEAR(lg.grads[0].d_center, 0.0, 1e-12);
}

TEST(LossTest, UnmatchedSlotsGetOnlyConfidenceGradient) {
  QueryBank bank = *UniformQueryBank(ThreeClass(), 1, 0.2);
  SyntheticSample s{60, {{10, 15}}, {0}};
  auto lg = MatchedLossAndGrad(bank, s, MatchStrategy::kLengthwise, {}, {});
  ASSERT_TRUE(lg.ok());
  ASSERT_EQ(lg->matches, (std::vector<std::pair<int, int>>{{0, 0}}));
  for (int i : {1, 2}) {
    EXPECT_EQ(lg->grads[i].d_center, 0.0);
    EXPECT_EQ(lg->grads[i].d_log_width, 0.0);
    EXPECT_GT(lg->grads[i].d_logit, 0.0);
  }
  EXPECT_LT(lg->grads[0].d_logit, 0.0);
}

TEST(LossTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TrainConfig config;
  int checked = 0;
  while (checked < 300) {
    QueryBank bank = *UniformQueryBank(ThreeClass(), 1, 0.2);
    for (Slot& s : bank.slots) {
      s = {0.1 + 0.8 * u(rng), 0.02 + 0.6 * u(rng), 4 * (u(rng) - 0.5)};
    }
    const double a = u(rng) * 50;
    SyntheticSample sample{60, {{a, a + 2 + u(rng) * 8}}, {0}};
    const std::vector<std::pair<int, int>> matches = {{0, 0}};
    const Slot& m = bank.slots[0];
    const double gs = sample.gts[0].start / 60, ge = sample.gts[0].end / 60;
    const double ps = m.center - m.width / 2, pe = m.center + m.width / 2;
    bool kink = std::abs(m.center - 0.5 * (gs + ge)) < 1e-3 ||
                std::abs(m.width - (ge - gs)) < 1e-3;
    for (double p : {ps, pe}) {
      for (double g : {gs, ge}) kink |= std::abs(p - g) < 1e-3;
    }
    if (kink) continue;
    const LossAndGrad lg = MatchedLoss(bank, sample, matches, config);
    for (size_t i = 0; i < bank.slots.size(); ++i) {
      auto loss_at = [&](auto set) {
        return [&, set](double x) {
          QueryBank b = bank;
          set(b.slots[i], x);
          return MatchedLoss(b, sample, matches, config).loss;
        };
      };
      const double h = 1e-6;
      const double fd_c = oracle::CentralDifference(
          loss_at([](Slot& s, double x) { s.center = x; }), bank.slots[i].center, h);
      const double fd_lw = oracle::CentralDifference(
          loss_at([](Slot& s, double x) { s.width = std::exp(x); }),
          std::log(bank.slots[i].width), h);
      const double fd_z = oracle::CentralDifference(
          loss_at([](Slot& s, double x) { s.conf_logit = x; }),
          bank.slots[i].conf_logit, h);
      EXPECT_LT(oracle::RelativeError(lg.grads[i].d_center, fd_c), 1e-4);
      EXPECT_LT(oracle::RelativeError(lg.grads[i].d_log_width, fd_lw), 1e-4);
      EXPECT_LT(oracle::RelativeError(lg.grads[i].d_logit, fd_z), 1e-4);
    }
    ++checked;
  }
}

TEST(TrainTest, ZeroLearningRateLeavesBankUnchanged) {
  auto data = GenerateSynthetic(FixtureSpec(1, 50));
  QueryBank bank = *UniformQueryBank(ThreeClass(), 1, 0.2);
  TrainConfig config;
  config.learning_rate = 0;
  config.epochs = 5;
  auto r = Train(bank, *data, config);
  ASSERT_TRUE(r.ok()) << r.status();
  EXPECT_EQ(r->bank, bank);
  for (const EpochRecord& e : r->history) {
    EXPECT_EQ(e.loss, r->history[0].loss);
    EXPECT_EQ(e.loss_delta, 0.0);
  }
  EXPECT_EQ(r->n_train, 40u);
  EXPECT_EQ(r->n_heldout, 10u);
}

TEST(TrainTest, SingleSlotConvergesToSingleGt) {
  std::vector<SyntheticSample> data(5, SyntheticSample{60, {{21, 33}}, {0}});
  QueryBank bank = *UniformQueryBank(OneClass(), 1, 0.5);
  bank.slots[0].center = 0.3;
  TrainConfig config;
  config.learning_rate = 5e-4;
  config.epochs = 4000;
  config.strategy = MatchStrategy::kUnified;
  auto r = Train(bank, data, config);
  ASSERT_TRUE(r.ok());
  const Slot& s = r->bank.slots[0];
  EXPECT_NEAR(s.center, 27.0 / 60, 0.01);
  EXPECT_NEAR(s.width, 12.0 / 60, 0.01);
}

TEST(TrainTest, SingleClassLengthwiseEqualsUnifiedStepForStep) {
  SyntheticSpec spec = FixtureSpec(4, 100);
  spec.gts_max = 3;
  auto data = GenerateSynthetic(spec);
  Rng rng(2);
  QueryBank bank = *InitQueryBank(OneClass(), 4, 0.2, rng);
  TrainConfig config;
  config.epochs = 50;
  config.strategy = MatchStrategy::kLengthwise;
  auto lw = Train(bank, *data, config);
  config.strategy = MatchStrategy::kUnified;
  auto un = Train(bank, *data, config);
  ASSERT_TRUE(lw.ok() && un.ok());
  for (size_t e = 0; e < lw->history.size(); ++e) {
    EXPECT_EQ(lw->history[e].loss, un->history[e].loss);
  }
  EXPECT_EQ(lw->bank.slots, un->bank.slots);
}

TEST(TrainTest, LengthwiseMatchesStayInClass) {
  auto data = GenerateSynthetic(FixtureSpec(6, 100));
  Rng rng(6);
  QueryBank bank = *InitQueryBank(ThreeClass(), 1, 0.25, rng);
  for (const SyntheticSample& s : *data) {
    auto m = MatchBank(bank, s, MatchStrategy::kLengthwise, {});
    ASSERT_TRUE(m.ok());
    for (auto [slot, gt] : *m) {
      EXPECT_EQ(bank.class_of_slot(slot), ClassOf(s.gts[gt].length(), bank.scheme));
    }
  }
}

TEST(TrainTest, DeterministicAndRecordsHeldoutBuckets) {
  auto data = GenerateSynthetic(FixtureSpec(8, 100));
  Rng r1(1), r2(1);
  QueryBank b1 = *InitQueryBank(ThreeClass(), 1, 0.25, r1);
  QueryBank b2 = *InitQueryBank(ThreeClass(), 1, 0.25, r2);
  TrainConfig config;
  config.epochs = 20;
  auto a = Train(b1, *data, config);
  auto b = Train(b2, *data, config);
  ASSERT_TRUE(a.ok() && b.ok());
  EXPECT_EQ(a->bank, b->bank);
  EXPECT_FALSE(a->history.back().heldout_r1.empty());
}

TEST(TrainTest, DivergenceIsReportedWithEpoch) {
  // |dc| + |dw| > 1, so the scaled L1 term overflows.
  std::vector<SyntheticSample> data(5, SyntheticSample{60, {{54, 60}}, {0}});
  QueryBank bank{OneClass(), 1, {{0.0, 1.0, 0.0}}};
  TrainConfig config;
  config.lambda_l1 = std::numeric_limits<double>::max();
  config.epochs = 3;
  auto r = Train(bank, data, config);
  ASSERT_FALSE(r.ok());
  EXPECT_NE(r.status().message().find("epoch 1"), std::string::npos);
}

TEST(ReportTest, InsideFraction) {
  QueryBank bank{*PresetScheme("qvhighlights"), 2, {}};
  for (int i = 0; i < 8; ++i) bank.slots.push_back({0.5, 5.0 / 150, 0});
  const auto r = SpecializationReport(bank, 150);
  ASSERT_EQ(r.size(), 4u);
  EXPECT_DOUBLE_EQ(r[0].inside_fraction, 1.0);
  EXPECT_NEAR(r[0].mean_width, 5.0, 1e-12);
  EXPECT_DOUBLE_EQ(r[1].inside_fraction, 0.0);
}

}  // namespace
}  // namespace momentkit
