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

// Synthetic membership game.
//
// Each in-distribution sample i draws a difficulty mu_i ~ N(mu0, tau^2) and
// joins a uniformly random half of the models. Its logit under model j is
// N(mu_i + shift * [i in j], sigma^2) and the stored signal is
// sigmoid(logit). The last floor(ood_fraction * n) rows are out-of-distribution
// queries: their difficulty is offset by ood_shift and no model trains on them.
//
// Draw order from Rng(SplitMix64(seed)), sample by sample: difficulty, then
// (in-distribution rows only) PartialShuffle of the column indices 0..M-1 by
// M/2 steps, whose first M/2 entries are the IN models, then one Normal per
// column in column order.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mia_audit/error.hpp"
#include "mia_audit/random.hpp"
#include "mia_audit/signal_store.hpp"
#include "mia_audit/text_io.hpp"

namespace mia_audit {

struct GameConfig {
  std::size_t n_samples = 1000;
  std::size_t n_models = 16;
  double member_shift = 1.0;
  double noise_sigma = 1.0;
  double difficulty_spread = 1.0;
  double difficulty_mean = 0.0;
  double ood_fraction = 0.0;
  double ood_shift = 0.0;
  std::uint64_t seed = 0;

  void Validate() const {
    if (n_samples == 0) ThrowValidation("n_samples must be positive");
    if (n_models == 0 || n_models % 2 != 0) ThrowValidation("n_models must be a positive even number");
    if (!(noise_sigma > 0.0) || !std::isfinite(noise_sigma)) {
      ThrowValidation("noise_sigma must be positive");
    }
    if (!(difficulty_spread >= 0.0) || !std::isfinite(difficulty_spread)) {
      ThrowValidation("difficulty_spread must be non-negative");
    }
    if (!(ood_fraction >= 0.0 && ood_fraction < 1.0)) {
      ThrowValidation("ood_fraction must lie in [0, 1)");
    }
    if (!std::isfinite(member_shift) || !std::isfinite(difficulty_mean) ||
        !std::isfinite(ood_shift)) {
      ThrowValidation("game parameters must be finite");
    }
  }

  std::size_t ood_rows() const {
    return static_cast<std::size_t>(std::floor(ood_fraction * static_cast<double>(n_samples)));
  }

  std::string ToKeyValue() const {
    std::string out;
    out += "n_samples=" + std::to_string(n_samples) + "\n";
    out += "n_models=" + std::to_string(n_models) + "\n";
    out += "member_shift=" + FormatDouble(member_shift) + "\n";
    out += "noise_sigma=" + FormatDouble(noise_sigma) + "\n";
    out += "difficulty_spread=" + FormatDouble(difficulty_spread) + "\n";
    out += "difficulty_mean=" + FormatDouble(difficulty_mean) + "\n";
    out += "ood_fraction=" + FormatDouble(ood_fraction) + "\n";
    out += "ood_shift=" + FormatDouble(ood_shift) + "\n";
    out += "seed=" + std::to_string(seed) + "\n";
    return out;
  }
};

struct GameOutput {
  SignalMatrix signals;
  MembershipMatrix membership;
  std::size_t ood_rows = 0;
};

inline double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline GameOutput SimulateGame(const GameConfig& cfg) {
  cfg.Validate();
  const std::size_t n = cfg.n_samples;
  const std::size_t m = cfg.n_models;
  const std::size_t ood_start = n - cfg.ood_rows();
  Rng rng(SplitMix64(cfg.seed));

  std::vector<double> values(n * m);
  std::vector<std::uint8_t> bits(n * m, 0);
  std::vector<std::size_t> columns(m);
  for (std::size_t i = 0; i < n; ++i) {
    const bool ood = i >= ood_start;
    double difficulty = rng.Normal(cfg.difficulty_mean, cfg.difficulty_spread);
    if (ood) difficulty += cfg.ood_shift;
    if (!ood) {
      std::iota(columns.begin(), columns.end(), 0);
      rng.PartialShuffle(std::span<std::size_t>(columns), m / 2);
      for (std::size_t k = 0; k < m / 2; ++k) bits[i * m + columns[k]] = 1;
    }
    for (std::size_t j = 0; j < m; ++j) {
      const double mean = difficulty + (bits[i * m + j] ? cfg.member_shift : 0.0);
      values[i * m + j] = Sigmoid(rng.Normal(mean, cfg.noise_sigma));
    }
  }
  // Tiny games may leave a column without non-members; loading such files
  // later reports it, generation does not.
  return {SignalMatrix::Create(std::move(values), n, m, SignalKind::kProbability),
          MembershipMatrix::CreateUnchecked(std::move(bits), n, m), n - ood_start};
}

// True iff every row with at least one membership has exactly n_models / 2.
// Rows with no memberships are out-of-distribution queries.
inline bool MembershipBalanceCheck(const MembershipMatrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::size_t count = 0;
    for (std::size_t c = 0; c < m.cols(); ++c) count += m.at(r, c) ? 1 : 0;
    if (count != 0 && 2 * count != m.cols()) return false;
  }
  return true;
}

}  // namespace mia_audit
