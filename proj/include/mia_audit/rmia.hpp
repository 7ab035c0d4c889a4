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

#pragma once

// Relative membership inference (RMIA).
//
// For a query x and a population sample z, the pairwise likelihood ratio of
// the target model is
//
//   LR(x, z) = (Pr(x|target) / Pr(x)) / (Pr(z|target) / Pr(z))
//
// where the priors Pr(.) are averages over reference models. The score of x is
// the fraction of population samples z with LR(x, z) > gamma (or >= gamma with
// non-strict dominance). Ratios are compared in log space.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mia_audit/confidence.hpp"
#include "mia_audit/error.hpp"
#include "mia_audit/metrics.hpp"
#include "mia_audit/signal_store.hpp"

namespace mia_audit {

enum class AttackMode { kOnline, kOffline };
enum class ZPriorMode { kPlainMean, kOfflineRescale };
enum class Dominance { kStrict, kNonStrict };

struct AttackConfig {
  double gamma = 2.0;
  AttackMode mode = AttackMode::kOffline;
  double offline_a = 0.3;
  ZPriorMode z_prior_mode = ZPriorMode::kPlainMean;
  Dominance dominance = Dominance::kStrict;
  std::optional<std::size_t> z_subsample;
  bool voting = false;
  std::uint64_t seed = 0;  // drives z subsampling only

  void Validate() const {
    if (!(gamma >= 1.0) || !std::isfinite(gamma)) ThrowValidation("gamma must be >= 1");
    if (!(offline_a >= 0.0 && offline_a <= 1.0)) ThrowValidation("offline a must lie in [0, 1]");
    if (z_subsample && *z_subsample == 0) ThrowValidation("z subsample size must be positive");
  }
};

// Pr(x) or Pr(z); always > 0.
struct PriorEstimate {
  double value = 1.0;
};

inline constexpr double kPriorFloor = 1e-300;

// Score plus the number of population pairs that could not be compared.
struct RmiaResult {
  double score = 0.0;
  std::size_t population = 0;
  std::size_t skipped_pairs = 0;
};

// log(Ratio_x) - log(Ratio_z) against log(gamma). Returns nullopt for a 0/0
// pair, where both target probabilities are zero.
inline std::optional<bool> Dominates(double log_ratio_x, double log_ratio_z, double log_gamma,
                                     Dominance dominance) {
  if (log_ratio_x == -HUGE_VAL && log_ratio_z == -HUGE_VAL) return std::nullopt;
  const double diff = log_ratio_x - log_ratio_z;
  return dominance == Dominance::kStrict ? diff > log_gamma : diff >= log_gamma;
}

// Prepared RMIA attack over one AuditDataset. Holds the confidence-transformed
// probability table and the per-sample population ratios; Score() is const
// and safe to call concurrently.
class RmiaAttack {
 public:
  RmiaAttack(const AuditDataset& dataset, AttackConfig cfg, const ConfidenceConfig& conf)
      : dataset_(dataset), cfg_(cfg), probs_(ApplyConfidence(dataset.signals, conf)) {
    cfg_.Validate();
    if (dataset_.references.empty()) ThrowPrecondition("RMIA needs at least one reference model");
    const std::size_t n = dataset_.rows();
    log_ratio_z_.resize(n);
    z_error_.assign(n, std::string());
    for (std::size_t i = 0; i < n; ++i) {
      try {
        const PriorEstimate prior = cfg_.z_prior_mode == ZPriorMode::kPlainMean
                                        ? PriorPlainMean(i)
                                        : PriorOffline(i, cfg_.offline_a);
        log_ratio_z_[i] = std::log(prob(i, dataset_.target)) - std::log(prior.value);
      } catch (const AuditError& e) {
        z_error_[i] = e.what();
      }
    }
  }

  const AuditDataset& dataset() const { return dataset_; }
  const AttackConfig& config() const { return cfg_; }
  double prob(std::size_t sample, std::size_t model) const {
    return probs_[sample * dataset_.signals.cols() + model];
  }

  // 1/2 (mean over IN references + mean over OUT references).
  PriorEstimate PriorOnline(std::size_t sample) const {
    double in_sum = 0.0, out_sum = 0.0;
    std::size_t in_n = 0, out_n = 0;
    for (std::size_t r : dataset_.references) {
      if (dataset_.membership.at(sample, r)) {
        in_sum += prob(sample, r);
        ++in_n;
      } else {
        out_sum += prob(sample, r);
        ++out_n;
      }
    }
    if (in_n == 0 || out_n == 0) {
      ThrowPrecondition("online mode unavailable for query " + SampleId(sample) + ": no " +
                        (in_n == 0 ? "IN" : "OUT") + " reference models");
    }
    const double value =
        0.5 * (in_sum / static_cast<double>(in_n) + out_sum / static_cast<double>(out_n));
    return {std::max(value, kPriorFloor)};
  }

  // 1/2 ((1 + a) Pr_OUT + (1 - a)) with Pr_OUT the mean over OUT references.
  PriorEstimate PriorOffline(std::size_t sample, double a) const {
    double out_sum = 0.0;
    std::size_t out_n = 0;
    for (std::size_t r : dataset_.references) {
      if (!dataset_.membership.at(sample, r)) {
        out_sum += prob(sample, r);
        ++out_n;
      }
    }
    if (out_n == 0) {
      ThrowPrecondition("offline mode unavailable for sample " + SampleId(sample) +
                        ": no OUT reference models");
    }
    const double pr_out = out_sum / static_cast<double>(out_n);
    return {std::max(0.5 * ((1.0 + a) * pr_out + (1.0 - a)), kPriorFloor)};
  }

  // Mean over every reference model.
  PriorEstimate PriorPlainMean(std::size_t sample) const {
    double sum = 0.0;
    for (std::size_t r : dataset_.references) sum += prob(sample, r);
    return {std::max(sum / static_cast<double>(dataset_.references.size()), kPriorFloor)};
  }

  PriorEstimate QueryPrior(std::size_t sample) const {
    return cfg_.mode == AttackMode::kOnline ? PriorOnline(sample)
                                            : PriorOffline(sample, cfg_.offline_a);
  }

  double LogRatioX(std::size_t sample) const {
    return std::log(prob(sample, dataset_.target)) - std::log(QueryPrior(sample).value);
  }

  double LogRatioZ(std::size_t sample) const {
    if (!z_error_[sample].empty()) ThrowPrecondition(z_error_[sample]);
    return log_ratio_z_[sample];
  }

  RmiaResult Score(std::size_t query) const {
    const auto population =
        SelectZPopulation(dataset_, query, cfg_.z_subsample, cfg_.seed);
    const double lx = LogRatioX(query);
    const double log_gamma = std::log(cfg_.gamma);
    RmiaResult result;
    result.population = population.size();
    std::size_t dominated = 0;
    for (std::size_t z : population) {
      const auto d = Dominates(lx, LogRatioZ(z), log_gamma, cfg_.dominance);
      if (!d) {
        ++result.skipped_pairs;
      } else if (*d) {
        ++dominated;
      }
    }
    result.score = static_cast<double>(dominated) / static_cast<double>(population.size());
    return result;
  }

  // Majority vote over the query's augmentation group: z is dominated when
  // strictly more than half of the group's rows dominate it.
  RmiaResult ScoreVoted(std::size_t query) const {
    const auto population =
        SelectZPopulation(dataset_, query, cfg_.z_subsample, cfg_.seed);
    const auto rows = dataset_.GroupRows(query);
    std::vector<double> lx(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) lx[k] = LogRatioX(rows[k]);
    const double log_gamma = std::log(cfg_.gamma);

    RmiaResult result;
    result.population = population.size();
    std::size_t dominated = 0;
    for (std::size_t z : population) {
      const double lz = LogRatioZ(z);
      std::size_t votes = 0;
      for (double v : lx) {
        const auto d = Dominates(v, lz, log_gamma, cfg_.dominance);
        if (!d) {
          ++result.skipped_pairs;
        } else if (*d) {
          ++votes;
        }
      }
      if (2 * votes > lx.size()) ++dominated;
    }
    result.score = static_cast<double>(dominated) / static_cast<double>(population.size());
    return result;
  }

  RmiaResult ScoreQuery(std::size_t query) const {
    return cfg_.voting ? ScoreVoted(query) : Score(query);
  }

 private:
  std::string SampleId(std::size_t i) const { return dataset_.signals.sample_ids()[i]; }

  const AuditDataset& dataset_;
  AttackConfig cfg_;
  std::vector<double> probs_;
  std::vector<double> log_ratio_z_;
  std::vector<std::string> z_error_;
};

inline double RmiaScore(std::size_t query, const AuditDataset& dataset, const AttackConfig& cfg,
                        const ConfidenceConfig& conf) {
  return RmiaAttack(dataset, cfg, conf).Score(query).score;
}

inline double RmiaScoreVoted(std::size_t query, const AuditDataset& dataset,
                             const AttackConfig& cfg, const ConfidenceConfig& conf) {
  return RmiaAttack(dataset, cfg, conf).ScoreVoted(query).score;
}

// ---------------------------------------------------------------------------
// Direct likelihood ratio with Gaussian fits over rescaled logits.

inline constexpr double kVarianceFloor = 1e-12;

struct GaussianFit {
  double mean = 0.0;
  double variance = kVarianceFloor;

  double LogDensity(double v) const {
    const double d = v - mean;
    return -0.5 * std::log(2.0 * std::numbers::pi * variance) - d * d / (2.0 * variance);
  }
};

// Mean and unbiased variance, floored at 1e-12. Needs at least two values.
inline GaussianFit FitGaussian(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::max(sq / (n - 1.0), kVarianceFloor)};
}

inline constexpr std::size_t kMinDirectClassModels = 2;

// For each pair (x, z), class A holds reference models trained on x but not z
// and class B those trained on z but not x. The log LR is
//   log N(t_x; A(x)) + log N(t_z; A(z)) - log N(t_x; B(x)) - log N(t_z; B(z))
// with t the target model's rescaled logits. Pairs with fewer than two models
// in either class are skipped; the score is the dominated fraction of the
// remaining pairs.
class RmiaDirectAttack {
 public:
  RmiaDirectAttack(const AuditDataset& dataset, AttackConfig cfg, const ConfidenceConfig& conf)
      : dataset_(dataset), cfg_(cfg) {
    cfg_.Validate();
    const auto probs = ApplyConfidence(dataset.signals, conf);
    logits_.resize(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) logits_[i] = RescaledLogit(probs[i]);
  }

  double logit(std::size_t sample, std::size_t model) const {
    return logits_[sample * dataset_.signals.cols() + model];
  }

  // nullopt when either class has fewer than two models. Two passes over the
  // reference list (means, then squared deviations) so no buffers are needed.
  std::optional<double> PairLogLr(std::size_t x, std::size_t z) const {
    double sum[4] = {0, 0, 0, 0};  // A(x), A(z), B(x), B(z)
    std::size_t a_n = 0, b_n = 0;
    for (std::size_t r : dataset_.references) {
      const int cls = PairClass(x, z, r);
      if (cls < 0) continue;
      sum[2 * cls] += logit(x, r);
      sum[2 * cls + 1] += logit(z, r);
      ++(cls == 0 ? a_n : b_n);
    }
    if (a_n < kMinDirectClassModels || b_n < kMinDirectClassModels) return std::nullopt;

    const double count[4] = {double(a_n), double(a_n), double(b_n), double(b_n)};
    double mean[4], sq[4] = {0, 0, 0, 0};
    for (int k = 0; k < 4; ++k) mean[k] = sum[k] / count[k];
    for (std::size_t r : dataset_.references) {
      const int cls = PairClass(x, z, r);
      if (cls < 0) continue;
      const double dx = logit(x, r) - mean[2 * cls];
      const double dz = logit(z, r) - mean[2 * cls + 1];
      sq[2 * cls] += dx * dx;
      sq[2 * cls + 1] += dz * dz;
    }
    GaussianFit fit[4];
    for (int k = 0; k < 4; ++k) {
      fit[k] = {mean[k], std::max(sq[k] / (count[k] - 1.0), kVarianceFloor)};
    }
    const double tx = logit(x, dataset_.target);
    const double tz = logit(z, dataset_.target);
    return fit[0].LogDensity(tx) + fit[1].LogDensity(tz) - fit[2].LogDensity(tx) -
           fit[3].LogDensity(tz);
  }

  RmiaResult Score(std::size_t query) const {
    const auto population =
        SelectZPopulation(dataset_, query, cfg_.z_subsample, cfg_.seed);
    const double log_gamma = std::log(cfg_.gamma);
    RmiaResult result;
    std::size_t dominated = 0;
    for (std::size_t z : population) {
      const auto lr = PairLogLr(query, z);
      if (!lr) {
        ++result.skipped_pairs;
        continue;
      }
      ++result.population;
      if (cfg_.dominance == Dominance::kStrict ? *lr > log_gamma : *lr >= log_gamma) {
        ++dominated;
      }
    }
    if (result.population == 0) {
      ThrowPrecondition("direct mode unavailable for query " +
                        dataset_.signals.sample_ids()[query] +
                        ": no population sample has two models in each IN/OUT class");
    }
    result.score = static_cast<double>(dominated) / static_cast<double>(result.population);
    return result;
  }

 private:
  // 0: trained on x but not z; 1: trained on z but not x; -1 otherwise.
  int PairClass(std::size_t x, std::size_t z, std::size_t r) const {
    const bool x_in = dataset_.membership.at(x, r);
    const bool z_in = dataset_.membership.at(z, r);
    if (x_in == z_in) return -1;
    return x_in ? 0 : 1;
  }

  const AuditDataset& dataset_;
  AttackConfig cfg_;
  std::vector<double> logits_;
};

inline double RmiaScoreDirect(std::size_t query, const AuditDataset& dataset,
                              const AttackConfig& cfg, const ConfidenceConfig& conf) {
  return RmiaDirectAttack(dataset, cfg, conf).Score(query).score;
}

// ---------------------------------------------------------------------------
// Offline factor calibration.

struct CalibrationResult {
  double best_a = 0.0;
  std::vector<double> grid;
  std::vector<double> aucs;
};

// Attacks model_i with model_j as the only reference, once per a in the grid,
// and returns the a with the highest AUC (ties go to the smaller a). The
// offline prior needs an OUT reference, so the queries are the base samples
// that model_j did not train on.
inline CalibrationResult CalibrateOfflineA(const SignalMatrix& signals,
                                           const MembershipMatrix& membership,
                                           const std::optional<AugmentationMap>& augmentations,
                                           std::size_t model_i, std::size_t model_j,
                                           std::span<const double> grid,
                                           const ConfidenceConfig& conf,
                                           AttackConfig base = {}) {
  if (grid.empty()) ThrowValidation("calibration grid is empty");
  if (model_i == model_j) ThrowValidation("calibration needs two distinct models");
  const AuditDataset dataset =
      AuditDataset::Create(signals, membership, augmentations, model_i, {model_j});

  std::vector<std::size_t> queries;
  std::vector<std::uint8_t> labels;
  for (std::size_t q : dataset.BaseSamples()) {
    if (!membership.at(q, model_j)) {
      queries.push_back(q);
      labels.push_back(membership.at(q, model_i) ? 1 : 0);
    }
  }

  CalibrationResult result;
  result.grid.assign(grid.begin(), grid.end());
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    AttackConfig cfg = base;
    cfg.mode = AttackMode::kOffline;
    cfg.offline_a = grid[k];
    const RmiaAttack attack(dataset, cfg, conf);
    std::vector<double> scores(queries.size());
    for (std::size_t q = 0; q < queries.size(); ++q) {
      scores[q] = attack.ScoreQuery(queries[q]).score;
    }
    const double auc = Auc(RocFromScores(scores, labels));
    result.aucs.push_back(auc);
    if (!best || auc > result.aucs[*best] ||
        (auc == result.aucs[*best] && grid[k] < grid[*best])) {
      best = k;
    }
  }
  result.best_a = grid[*best];
  return result;
}

}  // namespace mia_audit
