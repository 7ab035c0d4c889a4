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

// Confidence functions mapping logits to the probability Pr(x|model), and the
// rescaled-logit signal.
//
// A logit-kind SignalMatrix holds one scalar per cell: the true-class logit
// measured against a single competing class fixed at 0. Transforms are
// evaluated on the two-class vector (v, 0) with label 0.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mia_audit/error.hpp"
#include "mia_audit/signal_store.hpp"

namespace mia_audit {

enum class ConfidenceFunction {
  kSoftmax,
  kTaylorSoftmax,
  kSmSoftmax,
  kSmTaylorSoftmax,
  kIdentity,
};

struct ConfidenceConfig {
  ConfidenceFunction function = ConfidenceFunction::kIdentity;
  double temperature = 1.0;  // softmax only
  int taylor_order = 4;
  double soft_margin = 0.6;

  void Validate() const {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
      ThrowValidation("temperature must be positive");
    }
    if (taylor_order < 1) ThrowValidation("taylor order must be >= 1");
    if (!(soft_margin >= 0.0) || !std::isfinite(soft_margin)) {
      ThrowValidation("soft margin must be non-negative");
    }
  }
};

inline constexpr double kRescaleEpsilon = 1e-12;

// Partial sum of the exponential series: sum_{i=0}^{n} a^i / i!.
inline double TaylorApx(double a, int n) {
  double term = 1.0;
  double sum = 1.0;
  for (int i = 1; i <= n; ++i) {
    term *= a / static_cast<double>(i);
    sum += term;
  }
  return sum;
}

namespace internal {

inline void CheckLogits(std::span<const double> logits, std::size_t label) {
  if (logits.size() < 2) ThrowValidation("confidence needs at least two classes");
  if (label >= logits.size()) ThrowValidation("label index out of range");
  for (double c : logits) {
    if (!std::isfinite(c)) ThrowValidation("non-finite logit");
  }
}

// exp(numer) / (exp(numer) + sum_{i != label} exp(logits[i] / scale)), with the
// true-class exponent supplied separately so that margins can be applied.
inline double ExpRatio(std::span<const double> logits, std::size_t label, double numer,
                       double scale) {
  double top = numer;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (i != label) top = std::max(top, logits[i] / scale);
  }
  const double own = std::exp(numer - top);
  double rest = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (i != label) rest += std::exp(logits[i] / scale - top);
  }
  return own / (own + rest);
}

}  // namespace internal

inline double SoftmaxConfidence(std::span<const double> logits, std::size_t label,
                                const ConfidenceConfig& cfg) {
  internal::CheckLogits(logits, label);
  return internal::ExpRatio(logits, label, logits[label] / cfg.temperature, cfg.temperature);
}

// Soft-margin softmax: exp(c_y - m) / (exp(c_y - m) + sum_{i != y} exp(c_i)).
inline double SmSoftmaxConfidence(std::span<const double> logits, std::size_t label,
                                  const ConfidenceConfig& cfg) {
  internal::CheckLogits(logits, label);
  return internal::ExpRatio(logits, label, logits[label] - cfg.soft_margin, 1.0);
}

// apx(c_y - m) / (apx(c_y - m) + sum_{i != y} apx(c_i)) with apx the order-n
// Taylor polynomial of exp. Every apx term must be positive.
inline double SmTaylorSoftmax(std::span<const double> logits, std::size_t label,
                              const ConfidenceConfig& cfg) {
  internal::CheckLogits(logits, label);
  const double own = TaylorApx(logits[label] - cfg.soft_margin, cfg.taylor_order);
  if (!(own > 0.0)) ThrowDomain("non-positive Taylor term for the true class");
  double denom = own;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (i == label) continue;
    const double t = TaylorApx(logits[i], cfg.taylor_order);
    if (!(t > 0.0)) ThrowDomain("non-positive Taylor term for class " + std::to_string(i));
    denom += t;
  }
  return own / denom;
}

inline double Confidence(std::span<const double> logits, std::size_t label,
                         const ConfidenceConfig& cfg) {
  switch (cfg.function) {
    case ConfidenceFunction::kSoftmax:
      return SoftmaxConfidence(logits, label, cfg);
    case ConfidenceFunction::kSmSoftmax:
      return SmSoftmaxConfidence(logits, label, cfg);
    case ConfidenceFunction::kTaylorSoftmax: {
      ConfidenceConfig no_margin = cfg;
      no_margin.soft_margin = 0.0;
      return SmTaylorSoftmax(logits, label, no_margin);
    }
    case ConfidenceFunction::kSmTaylorSoftmax:
      return SmTaylorSoftmax(logits, label, cfg);
    case ConfidenceFunction::kIdentity:
      break;
  }
  ThrowValidation("identity confidence requires probability signals");
}

// log(p / (1 - p)) with p clamped to [1e-12, 1 - 1e-12]. Both sides are
// clamped separately so that 1 - p keeps its precision near 1.
inline double RescaledLogit(double p) {
  const double q = std::clamp(p, kRescaleEpsilon, 1.0 - kRescaleEpsilon);
  const double r = std::clamp(1.0 - p, kRescaleEpsilon, 1.0 - kRescaleEpsilon);
  return std::log(q) - std::log(r);
}

// Probability table (row-major, same shape as the signals) consumed by every
// attack. Probability signals pass through unchanged and require the identity
// function; logit signals require a real transform.
inline std::vector<double> ApplyConfidence(const SignalMatrix& signals,
                                           const ConfidenceConfig& cfg) {
  cfg.Validate();
  if (signals.kind() == SignalKind::kProbability) {
    if (cfg.function != ConfidenceFunction::kIdentity) {
      ThrowValidation("confidence transform needs logit signals; probability signals use identity");
    }
    return std::vector<double>(signals.values().begin(), signals.values().end());
  }
  if (cfg.function == ConfidenceFunction::kIdentity) {
    ThrowValidation("identity confidence requires probability signals");
  }
  std::vector<double> out(signals.values().size());
  for (std::size_t r = 0; r < signals.rows(); ++r) {
    for (std::size_t c = 0; c < signals.cols(); ++c) {
      const std::array<double, 2> logits{signals.at(r, c), 0.0};
      try {
        out[r * signals.cols() + c] = Confidence(logits, 0, cfg);
      } catch (const AuditError& e) {
        throw AuditError(e.kind(), std::string(e.what()) + " for sample " +
                                       signals.sample_ids()[r] + " under model " +
                                       signals.model_ids()[c]);
      }
    }
  }
  return out;
}

}  // namespace mia_audit
