// Copyright 2026 The MIA Audit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mia_audit/baselines.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "mia_audit/game_sim.hpp"
#include "mia_audit/metrics.hpp"

namespace mia_audit {
namespace {

AuditDataset Make(std::vector<double> values, std::vector<std::uint8_t> bits, std::size_t rows,
                  std::size_t cols, std::vector<std::size_t> refs) {
  return AuditDataset::Create(
      SignalMatrix::Create(std::move(values), rows, cols, SignalKind::kProbability),
      MembershipMatrix::CreateUnchecked(std::move(bits), rows, cols), std::nullopt, 0,
      std::move(refs));
}

AuditDataset Game(std::size_t n, std::size_t m, std::uint64_t seed, double shift = 1.0) {
  GameConfig cfg;
  cfg.n_samples = n;
  cfg.n_models = m;
  cfg.seed = seed;
  cfg.member_shift = shift;
  const GameOutput out = SimulateGame(cfg);
  return AuditDataset::Create(out.signals, out.membership, std::nullopt, 0,
                              AuditDataset::AllOtherModels(m, 0));
}

TEST(AttackPTest, ReturnsTargetSignal) {
  const AuditDataset ds = Make({0.73, 0.1, 0.73, 0.9}, {0, 0, 0, 0}, 2, 2, {1});
  EXPECT_EQ(AttackPScore(0, ds, ConfidenceConfig{}), 0.73);
  EXPECT_EQ(AttackPScore(0, ds, ConfidenceConfig{}), AttackPScore(1, ds, ConfidenceConfig{}));
}

// Pr_z(signal_x >= signal_z) over the target's non-members is a monotone
// coarsening of the direct signal: each of its ROC points is a direct ROC
// point (the foot of a vertical step).
TEST(AttackPTest, RocRefinesQuantileForm) {
  const AuditDataset ds = Game(100, 4, 9, 2.0);
  const AttackP attack(ds, ConfidenceConfig{});
  std::vector<double> direct, quantile;
  std::vector<std::uint8_t> labels;
  for (std::size_t q = 0; q < ds.rows(); ++q) {
    direct.push_back(attack.Score(q));
    int pass = 0, total = 0;
    for (std::size_t z = 0; z < ds.rows(); ++z) {
      if (ds.IsMember(z)) continue;
      ++total;
      if (ds.signals.at(q, 0) >= ds.signals.at(z, 0)) ++pass;
    }
    quantile.push_back(static_cast<double>(pass) / total);
    labels.push_back(ds.IsMember(q));
  }
  const RocCurve fine = RocFromScores(direct, labels);
  const RocCurve coarse = RocFromScores(quantile, labels);
  EXPECT_LT(coarse.size(), fine.size());
  for (std::size_t k = 0; k < coarse.size(); ++k) {
    bool found = false;
    for (std::size_t j = 0; j < fine.size() && !found; ++j) {
      found = fine.fpr[j] == coarse.fpr[k] && fine.tpr[j] == coarse.tpr[k];
    }
    EXPECT_TRUE(found) << "point " << k;
  }
}

TEST(AttackRTest, Examples) {
  const AuditDataset ds = Make({0.9, 0.5, 0.7, 0.95, 0.4, 0.4, 0.4, 0.4}, std::vector<std::uint8_t>(8, 0),
                               2, 4, {1, 2, 3});
  EXPECT_DOUBLE_EQ(AttackRScore(0, ds, ConfidenceConfig{}), 2.0 / 3.0);
  EXPECT_EQ(AttackRScore(1, ds, ConfidenceConfig{}), 1.0);
}

TEST(AttackRTest, NeedsReferences) {
  const AuditDataset ds = Make({0.9, 0.5, 0.7, 0.95}, {0, 0, 0, 0}, 2, 2, {});
  try {
    AttackRScore(0, ds, ConfidenceConfig{});
    FAIL() << "expected a precondition error";
  } catch (const AuditError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kPrecondition);
  }
}

TEST(AttackRTest, MatchesCountOracle) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> values(11);
    // Coarse values force ties.
    for (double& v : values) v = std::round(u(gen) * 8.0) / 8.0;
    std::vector<std::size_t> refs{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const AuditDataset ds = Make(values, std::vector<std::uint8_t>(11, 0), 1, 11, refs);
    int pass = 0;
    for (int r = 1; r <= 10; ++r) pass += values[0] >= values[r];
    EXPECT_EQ(AttackRScore(0, ds, ConfidenceConfig{}), pass / 10.0);
  }
}

TEST(LiraTest, OfflineAtOutMeanIsHalf) {
  // OUT references read p and 1 - p, whose rescaled logits average to 0.
  const AuditDataset ds = Make({0.5, 0.3, 0.7, 0.5, 0.6, 0.2}, std::vector<std::uint8_t>(6, 0), 2,
                               3, {1, 2});
  EXPECT_NEAR(LiraScore(0, ds, LiraConfig{}, ConfidenceConfig{}), 0.5, 1e-15);
}

TEST(LiraTest, OnlineIdenticalFitsScoreZero) {
  // Row 0: IN refs {0.3, 0.7}, OUT refs {0.7, 0.3}: same mean and variance.
  LiraConfig lira;
  lira.mode = AttackMode::kOnline;
  lira.global_threshold = 2;
  std::vector<double> values{0.0, 0.3, 0.7, 0.7, 0.3, 0.5, 0.5, 0.5, 0.5, 0.5};
  const std::vector<std::uint8_t> bits{0, 1, 1, 0, 0, 0, 0, 0, 0, 0};
  for (double t : {0.01, 0.2, 0.5, 0.9, 0.999}) {
    values[0] = t;
    const AuditDataset ds = Make(values, bits, 2, 5, {1, 2, 3, 4});
    EXPECT_NEAR(LiraScore(0, ds, lira, ConfidenceConfig{}), 0.0, 1e-12);
  }
}

double Logit(double p) { return std::log(p / (1.0 - p)); }

struct Fit {
  double mean, var;
};

Fit OracleFit(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return {mean, var / (xs.size() - 1)};
}

double LogNormalPdf(double x, Fit f) {
  return std::log(std::exp(-(x - f.mean) * (x - f.mean) / (2 * f.var)) /
                  std::sqrt(2 * std::numbers::pi * f.var));
}

TEST(LiraTest, SixReferenceInstanceMatchesOracle) {
  const std::vector<double> values{0.81, 0.9, 0.75, 0.62, 0.35, 0.4, 0.22,  //
                                   0.5,  0.5, 0.5,  0.5,  0.5,  0.5, 0.5};
  const std::vector<std::uint8_t> bits{0, 1, 1, 1, 0, 0, 0,  //
                                       0, 0, 0, 0, 0, 0, 0};
  const AuditDataset ds = Make(values, bits, 2, 7, {1, 2, 3, 4, 5, 6});
  const Fit in = OracleFit({Logit(0.9), Logit(0.75), Logit(0.62)});
  const Fit out = OracleFit({Logit(0.35), Logit(0.4), Logit(0.22)});
  const double t = Logit(0.81);

  LiraConfig lira;
  lira.global_threshold = 2;
  const double phi = 0.5 * std::erfc(-((t - out.mean) / std::sqrt(out.var)) / std::sqrt(2.0));
  EXPECT_NEAR(LiraScore(0, ds, lira, ConfidenceConfig{}), phi, 1e-12);
  lira.mode = AttackMode::kOnline;
  EXPECT_NEAR(LiraScore(0, ds, lira, ConfidenceConfig{}),
              LogNormalPdf(t, in) - LogNormalPdf(t, out), 1e-12);
}

TEST(LiraTest, GlobalVariancePoolsReferenceSignals) {
  const std::vector<double> values{0.81, 0.9, 0.35, 0.4,  //
                                   0.3,  0.2, 0.6,  0.7};
  const std::vector<std::uint8_t> bits(8, 0);
  const AuditDataset ds = Make(values, bits, 2, 4, {1, 2, 3});
  LiraConfig lira;
  lira.variance_mode = LiraVarianceMode::kGlobal;
  const Fit pooled =
      OracleFit({Logit(0.9), Logit(0.35), Logit(0.4), Logit(0.2), Logit(0.6), Logit(0.7)});
  const double mean = (Logit(0.9) + Logit(0.35) + Logit(0.4)) / 3.0;
  const double expected =
      0.5 * std::erfc(-((Logit(0.81) - mean) / std::sqrt(pooled.var)) / std::sqrt(2.0));
  EXPECT_NEAR(LiraScore(0, ds, lira, ConfidenceConfig{}), expected, 1e-12);
}

TEST(LiraTest, OfflineIncreasingInTargetSignal) {
  std::vector<double> values{0.0, 0.1, 0.5, 0.8, 0.5, 0.5, 0.5, 0.5};
  const std::vector<std::uint8_t> bits(8, 0);
  double prev = -1.0;
  for (double t = 0.02; t < 0.99; t += 0.02) {
    values[0] = t;
    const AuditDataset ds = Make(values, bits, 2, 4, {1, 2, 3});
    const double s = LiraScore(0, ds, LiraConfig{}, ConfidenceConfig{});
    EXPECT_GT(s, prev);
    prev = s;
  }
}

TEST(LiraTest, NeedsOutReferences) {
  const AuditDataset ds = Make({0.5, 0.3, 0.5, 0.5}, {0, 1, 0, 0}, 2, 2, {1});
  LiraConfig lira;
  lira.global_threshold = 2;
  EXPECT_THROW(LiraScore(0, ds, lira, ConfidenceConfig{}), AuditError);
  lira.global_threshold = 1;
  EXPECT_THROW(lira.Validate(), AuditError);
}

// Saturated and constant signals stay finite thanks to the clamp and floor.
TEST(LiraTest, NeverNanOrInfinite) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> values(6 * 5);
    for (double& v : values) {
      const auto k = gen() % 4;
      v = k == 0 ? 0.0 : k == 1 ? 1.0 : 0.5;
    }
    std::vector<std::uint8_t> bits(30, 0);
    for (std::size_t r = 0; r < 5; ++r) bits[r * 5 + 1] = bits[r * 5 + 2] = 1;
    const AuditDataset ds = Make(values, bits, 6, 5, {1, 2, 3, 4});
    for (auto mode : {AttackMode::kOffline, AttackMode::kOnline}) {
      LiraConfig lira;
      lira.mode = mode;
      lira.global_threshold = 2;
      for (std::size_t q = 0; q < 5; ++q) {
        EXPECT_TRUE(std::isfinite(LiraScore(q, ds, lira, ConfidenceConfig{})));
      }
    }
  }
}

TEST(LiraTest, SingletonGroupsMatchBase) {
  const AuditDataset plain = Game(60, 8, 5);
  const AuditDataset grouped =
      AuditDataset::Create(plain.signals, plain.membership,
                           AugmentationMap::Identity(plain.signals.sample_ids()), 0,
                           plain.references);
  const LiraAttack a(plain, LiraConfig{}, ConfidenceConfig{});
  const LiraAttack b(grouped, LiraConfig{}, ConfidenceConfig{});
  for (std::size_t q = 0; q < 60; ++q) EXPECT_EQ(a.Score(q), b.Score(q));
}

TEST(LiraTest, AveragesGroupLogits) {
  const std::vector<double> values{0.8, 0.3, 0.2, 0.6, 0.4, 0.5, 0.5, 0.4,  //
                                   0.5, 0.5, 0.5, 0.5};
  const SignalMatrix signals = SignalMatrix::Create(values, 3, 4, SignalKind::kProbability);
  const AugmentationMap map = ParseAugmentationCsv("s0,g,1\ns1,g,0\ns2,h,1\n", signals);
  const AuditDataset ds = AuditDataset::Create(
      signals, MembershipMatrix::Create(std::vector<std::uint8_t>(12, 0), 3, 4), map, 0,
      {1, 2, 3});
  const LiraAttack attack(ds, LiraConfig{}, ConfidenceConfig{});
  EXPECT_NEAR(attack.logit(0, 0), (Logit(0.8) + Logit(0.4)) / 2.0, 1e-15);
  EXPECT_NEAR(attack.logit(0, 3), (Logit(0.6) + Logit(0.4)) / 2.0, 1e-15);
}

}  // namespace
}  // namespace mia_audit
