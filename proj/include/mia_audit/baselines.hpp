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

// Comparison attacks: Attack-P (population), Attack-R (reference models) and
// LiRA (Gaussian fits over rescaled logits, offline and online).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "mia_audit/confidence.hpp"
#include "mia_audit/error.hpp"
#include "mia_audit/rmia.hpp"
#include "mia_audit/signal_store.hpp"

namespace mia_audit {

// Attack-P: the target model's confidence on the query. Monotone in the
// population-quantile form Pr_z(Pr(x|target) >= Pr(z|target)), so the ROC is
// the same.
class AttackP {
 public:
  AttackP(const AuditDataset& dataset, const ConfidenceConfig& conf)
      : dataset_(dataset), probs_(ApplyConfidence(dataset.signals, conf)) {}

  double Score(std::size_t query) const {
    return probs_[query * dataset_.signals.cols() + dataset_.target];
  }

 private:
  const AuditDataset& dataset_;
  std::vector<double> probs_;
};

// Attack-R: fraction of reference models whose confidence on the query does
// not exceed the target's. Ties pass.
class AttackR {
 public:
  AttackR(const AuditDataset& dataset, const ConfidenceConfig& conf)
      : dataset_(dataset), probs_(ApplyConfidence(dataset.signals, conf)) {
    if (dataset_.references.empty()) ThrowPrecondition("Attack-R needs at least one reference model");
  }

  double Score(std::size_t query) const {
    const std::size_t cols = dataset_.signals.cols();
    const double target = probs_[query * cols + dataset_.target];
    std::size_t pass = 0;
    for (std::size_t r : dataset_.references) {
      if (target >= probs_[query * cols + r]) ++pass;
    }
    return static_cast<double>(pass) / static_cast<double>(dataset_.references.size());
  }

 private:
  const AuditDataset& dataset_;
  std::vector<double> probs_;
};

inline double AttackPScore(std::size_t query, const AuditDataset& dataset,
                           const ConfidenceConfig& conf) {
  return AttackP(dataset, conf).Score(query);
}

inline double AttackRScore(std::size_t query, const AuditDataset& dataset,
                           const ConfidenceConfig& conf) {
  return AttackR(dataset, conf).Score(query);
}

enum class LiraVarianceMode { kPerSample, kGlobal };

struct LiraConfig {
  AttackMode mode = AttackMode::kOffline;
  // kPerSample falls back to the global variance for a class with fewer than
  // global_threshold reference models.
  LiraVarianceMode variance_mode = LiraVarianceMode::kPerSample;
  std::size_t global_threshold = 64;

  void Validate() const {
    if (global_threshold < 2) ThrowValidation("LiRA global threshold must be >= 2");
  }
};

inline double StandardNormalCdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// LiRA over rescaled logits. Offline: Phi((t - mu_out) / sigma_out). Online:
// log N(t; mu_in, var_in) - log N(t; mu_out, var_out). With an augmentation
// map the rescaled logits of a group are averaged per model first.
class LiraAttack {
 public:
  LiraAttack(const AuditDataset& dataset, LiraConfig lira, const ConfidenceConfig& conf)
      : dataset_(dataset), lira_(lira) {
    lira_.Validate();
    const std::size_t cols = dataset.signals.cols();
    const auto probs = ApplyConfidence(dataset.signals, conf);
    const auto units = dataset.BaseSamples();
    logits_.assign(dataset.rows() * cols, 0.0);
    for (std::size_t base : units) {
      const auto rows = dataset.GroupRows(base);
      for (std::size_t c = 0; c < cols; ++c) {
        double sum = 0.0;
        for (std::size_t r : rows) sum += RescaledLogit(probs[r * cols + c]);
        logits_[base * cols + c] = sum / static_cast<double>(rows.size());
      }
    }
    global_out_ = PooledVariance(units, false);
    if (lira_.mode == AttackMode::kOnline) global_in_ = PooledVariance(units, true);
  }

  double logit(std::size_t sample, std::size_t model) const {
    return logits_[sample * dataset_.signals.cols() + model];
  }

  GaussianFit FitClass(std::size_t query, bool in_class) const {
    std::vector<double> values;
    for (std::size_t r : dataset_.references) {
      if (dataset_.membership.at(query, r) == in_class) values.push_back(logit(query, r));
    }
    const char* label = in_class ? "IN" : "OUT";
    if (values.empty()) {
      ThrowPrecondition(std::string("LiRA needs ") + label + " reference models for query " +
                        dataset_.signals.sample_ids()[query]);
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    if (lira_.variance_mode == LiraVarianceMode::kPerSample &&
        values.size() >= lira_.global_threshold) {
      return FitGaussian(values);
    }
    const auto& global = in_class ? global_in_ : global_out_;
    if (!global) {
      ThrowPrecondition(std::string("LiRA global variance needs at least two ") + label +
                        " reference signals");
    }
    return {mean, *global};
  }

  double Score(std::size_t query) const {
    const double t = logit(query, dataset_.target);
    const GaussianFit out = FitClass(query, false);
    if (lira_.mode == AttackMode::kOffline) {
      return StandardNormalCdf((t - out.mean) / std::sqrt(out.variance));
    }
    const GaussianFit in = FitClass(query, true);
    return in.LogDensity(t) - out.LogDensity(t);
  }

 private:
  // Unbiased variance of every (unit, reference) logit in the class, floored.
  std::optional<double> PooledVariance(const std::vector<std::size_t>& units,
                                       bool in_class) const {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t u : units) {
      for (std::size_t r : dataset_.references) {
        if (dataset_.membership.at(u, r) == in_class) {
          sum += logit(u, r);
          ++n;
        }
      }
    }
    if (n < 2) return std::nullopt;
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t u : units) {
      for (std::size_t r : dataset_.references) {
        if (dataset_.membership.at(u, r) == in_class) {
          const double d = logit(u, r) - mean;
          sq += d * d;
        }
      }
    }
    return std::max(sq / static_cast<double>(n - 1), kVarianceFloor);
  }

  const AuditDataset& dataset_;
  LiraConfig lira_;
  std::vector<double> logits_;
  std::optional<double> global_out_;
  std::optional<double> global_in_;
};

inline double LiraScore(std::size_t query, const AuditDataset& dataset, const LiraConfig& lira,
                        const ConfidenceConfig& conf) {
  return LiraAttack(dataset, lira, conf).Score(query);
}

}  // namespace mia_audit
