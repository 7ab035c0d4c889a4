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

// Reproducible runs: audit, compare, calibrate-a and simulate. Every run
// writes its outputs under an output prefix plus a provenance sidecar holding
// the resolved configuration and FNV-1a digests of the input files. The worker
// count is never written, and never changes an output byte.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mia_audit/baselines.hpp"
#include "mia_audit/confidence.hpp"
#include "mia_audit/error.hpp"
#include "mia_audit/game_sim.hpp"
#include "mia_audit/metrics.hpp"
#include "mia_audit/parallel.hpp"
#include "mia_audit/rmia.hpp"
#include "mia_audit/signal_store.hpp"
#include "mia_audit/text_io.hpp"

namespace mia_audit {

enum class AttackKind { kRmia, kRmiaDirect, kLira, kAttackP, kAttackR };

inline constexpr AttackKind kAllAttacks[] = {AttackKind::kRmia, AttackKind::kRmiaDirect,
                                             AttackKind::kLira, AttackKind::kAttackP,
                                             AttackKind::kAttackR};

inline std::string_view AttackName(AttackKind kind) {
  switch (kind) {
    case AttackKind::kRmia: return "rmia";
    case AttackKind::kRmiaDirect: return "rmia_direct";
    case AttackKind::kLira: return "lira";
    case AttackKind::kAttackP: return "attack_p";
    case AttackKind::kAttackR: return "attack_r";
  }
  return "unknown";
}

inline AttackKind ParseAttackKind(std::string_view name) {
  for (AttackKind kind : kAllAttacks) {
    if (AttackName(kind) == name) return kind;
  }
  ThrowValidation("unknown attack: " + std::string(name));
}

inline std::string_view ModeName(AttackMode m) {
  return m == AttackMode::kOnline ? "online" : "offline";
}

inline std::string_view ConfidenceName(ConfidenceFunction f) {
  switch (f) {
    case ConfidenceFunction::kSoftmax: return "softmax";
    case ConfidenceFunction::kTaylorSoftmax: return "taylor_softmax";
    case ConfidenceFunction::kSmSoftmax: return "sm_softmax";
    case ConfidenceFunction::kSmTaylorSoftmax: return "sm_taylor_softmax";
    case ConfidenceFunction::kIdentity: return "identity";
  }
  return "unknown";
}

struct RunConfig {
  AttackKind attack = AttackKind::kRmia;
  AttackConfig rmia;
  ConfidenceConfig confidence;
  LiraConfig lira;

  std::filesystem::path signals_path;
  std::optional<SignalFormat> signals_format;  // inferred from the extension if unset
  std::filesystem::path membership_path;
  std::filesystem::path augmentations_path;  // empty: none
  std::string target;                        // model id or column index
  std::vector<std::string> references;       // empty: every other model
  std::filesystem::path out_prefix;
  std::size_t workers = 1;
};

struct LoadedInputs {
  SignalMatrix signals;
  MembershipMatrix membership;
  std::optional<AugmentationMap> augmentations;
  std::vector<std::pair<std::string, std::string>> digests;  // (role, fnv1a64)
};

inline LoadedInputs LoadInputs(const RunConfig& run) {
  if (run.signals_path.empty()) ThrowValidation("no signals file given");
  if (run.membership_path.empty()) ThrowValidation("no membership file given");
  for (const auto& p : {run.signals_path, run.membership_path}) {
    if (!std::filesystem::exists(p)) ThrowValidation("missing input file: " + p.string());
  }
  if (!run.augmentations_path.empty() && !std::filesystem::exists(run.augmentations_path)) {
    ThrowValidation("missing input file: " + run.augmentations_path.string());
  }
  const SignalFormat format = run.signals_format.value_or(FormatFromPath(run.signals_path));
  SignalMatrix signals = LoadSignals(run.signals_path, format);
  MembershipMatrix membership = LoadMembership(run.membership_path, signals);
  std::optional<AugmentationMap> aug;
  if (!run.augmentations_path.empty()) aug = LoadAugmentations(run.augmentations_path, signals);

  std::vector<std::pair<std::string, std::string>> digests;
  digests.emplace_back("signals", HexDigest(Fnv1a64(ReadFile(run.signals_path))));
  digests.emplace_back("membership", HexDigest(Fnv1a64(ReadFile(run.membership_path))));
  if (aug) {
    digests.emplace_back("augmentations", HexDigest(Fnv1a64(ReadFile(run.augmentations_path))));
  }
  return {std::move(signals), std::move(membership), std::move(aug), std::move(digests)};
}

// A model id, or a column index when no id matches.
inline std::size_t ResolveModel(const SignalMatrix& signals, std::string_view name) {
  if (auto idx = signals.FindModel(name)) return *idx;
  std::size_t idx = 0;
  auto [ptr, ec] = std::from_chars(name.data(), name.data() + name.size(), idx);
  if (ec == std::errc() && ptr == name.data() + name.size() && idx < signals.cols()) return idx;
  ThrowValidation("unknown model: " + std::string(name));
}

inline AuditDataset BuildDataset(const LoadedInputs& in, const std::string& target,
                                 const std::vector<std::string>& references) {
  if (target.empty()) ThrowValidation("no target model given");
  const std::size_t t = ResolveModel(in.signals, target);
  std::vector<std::size_t> refs;
  if (references.empty()) {
    refs = AuditDataset::AllOtherModels(in.signals.cols(), t);
  } else {
    for (const auto& r : references) refs.push_back(ResolveModel(in.signals, r));
  }
  return AuditDataset::Create(in.signals, in.membership, in.augmentations, t, std::move(refs));
}

// Resolved scoring parameters as key=value lines. Voting over singleton
// groups equals plain scoring and is normalized away.
inline std::string CanonicalConfig(const RunConfig& run, const AuditDataset& dataset) {
  const bool grouped = dataset.augmentations && !dataset.augmentations->AllSingletons();
  std::string out;
  auto kv = [&out](std::string_view k, const std::string& v) {
    out += std::string(k) + "=" + v + "\n";
  };
  kv("attack", std::string(AttackName(run.attack)));
  kv("target", dataset.signals.model_ids()[dataset.target]);
  std::string refs;
  for (std::size_t r : dataset.references) {
    if (!refs.empty()) refs += ",";
    refs += dataset.signals.model_ids()[r];
  }
  kv("references", refs);
  kv("augmented", grouped ? "1" : "0");
  const auto& a = run.rmia;
  kv("mode", std::string(ModeName(a.mode)));
  kv("gamma", FormatDouble(a.gamma));
  kv("a", FormatDouble(a.offline_a));
  kv("z_prior", a.z_prior_mode == ZPriorMode::kPlainMean ? "plain_mean" : "offline_rescale");
  kv("dominance", a.dominance == Dominance::kStrict ? "strict" : "non_strict");
  kv("z_subsample", a.z_subsample ? std::to_string(*a.z_subsample) : "all");
  kv("voting", (a.voting && grouped) ? "1" : "0");
  kv("seed", std::to_string(a.seed));
  kv("confidence", std::string(ConfidenceName(run.confidence.function)));
  kv("temperature", FormatDouble(run.confidence.temperature));
  kv("taylor_order", std::to_string(run.confidence.taylor_order));
  kv("soft_margin", FormatDouble(run.confidence.soft_margin));
  kv("lira_mode", std::string(ModeName(run.lira.mode)));
  kv("lira_variance",
     run.lira.variance_mode == LiraVarianceMode::kPerSample ? "per_sample" : "global");
  kv("lira_global_threshold", std::to_string(run.lira.global_threshold));
  return out;
}

struct ScoredQueries {
  std::vector<std::size_t> queries;
  std::vector<double> scores;
  std::size_t skipped_pairs = 0;
};

// Scores every query with the configured attack on `workers` threads. Results
// are stored by query position, so they do not depend on the worker count.
inline ScoredQueries ScoreQueries(const RunConfig& run, const AuditDataset& dataset,
                                  std::vector<std::size_t> queries, std::size_t workers) {
  ScoredQueries out;
  out.scores.assign(queries.size(), 0.0);
  std::vector<std::size_t> skipped(queries.size(), 0);
  auto run_all = [&](auto&& score_one) {
    ParallelFor(queries.size(), workers, [&](std::size_t k) { score_one(k); });
  };
  switch (run.attack) {
    case AttackKind::kRmia: {
      const RmiaAttack attack(dataset, run.rmia, run.confidence);
      run_all([&](std::size_t k) {
        const RmiaResult r = attack.ScoreQuery(queries[k]);
        out.scores[k] = r.score;
        skipped[k] = r.skipped_pairs;
      });
      break;
    }
    case AttackKind::kRmiaDirect: {
      const RmiaDirectAttack attack(dataset, run.rmia, run.confidence);
      run_all([&](std::size_t k) {
        const RmiaResult r = attack.Score(queries[k]);
        out.scores[k] = r.score;
        skipped[k] = r.skipped_pairs;
      });
      break;
    }
    case AttackKind::kLira: {
      const LiraAttack attack(dataset, run.lira, run.confidence);
      run_all([&](std::size_t k) { out.scores[k] = attack.Score(queries[k]); });
      break;
    }
    case AttackKind::kAttackP: {
      const AttackP attack(dataset, run.confidence);
      run_all([&](std::size_t k) { out.scores[k] = attack.Score(queries[k]); });
      break;
    }
    case AttackKind::kAttackR: {
      const AttackR attack(dataset, run.confidence);
      run_all([&](std::size_t k) { out.scores[k] = attack.Score(queries[k]); });
      break;
    }
  }
  for (std::size_t s : skipped) out.skipped_pairs += s;
  out.queries = std::move(queries);
  return out;
}

inline ScoreReport BuildReport(const RunConfig& run, const AuditDataset& dataset,
                               const ScoredQueries& scored) {
  ScoreReport report;
  report.attack = std::string(AttackName(run.attack));
  report.target_model = dataset.signals.model_ids()[dataset.target];
  report.config_digest = HexDigest(Fnv1a64(CanonicalConfig(run, dataset)));
  report.rows.reserve(scored.queries.size());
  for (std::size_t k = 0; k < scored.queries.size(); ++k) {
    const std::size_t q = scored.queries[k];
    report.rows.push_back({dataset.signals.sample_ids()[q], scored.scores[k], dataset.IsMember(q)});
  }
  return report;
}

inline std::filesystem::path WithSuffix(const std::filesystem::path& prefix,
                                        std::string_view suffix) {
  return std::filesystem::path(prefix.string() + std::string(suffix));
}

inline std::string ProvenanceText(std::string_view command, const std::string& config,
                                  const LoadedInputs* inputs, const RunConfig* run) {
  std::string out = "command=" + std::string(command) + "\n";
  if (run) {
    out += "input.signals=" + run->signals_path.string() + "\n";
    out += "input.membership=" + run->membership_path.string() + "\n";
    if (!run->augmentations_path.empty()) {
      out += "input.augmentations=" + run->augmentations_path.string() + "\n";
    }
    out += "voting_requested=" + std::string(run->rmia.voting ? "1" : "0") + "\n";
  }
  if (inputs) {
    for (const auto& [role, digest] : inputs->digests) {
      out += "input." + role + ".fnv1a64=" + digest + "\n";
    }
  }
  out += config;
  return out;
}

struct AuditOutcome {
  ScoreReport report;
  RocCurve roc;
  MetricSummary summary;
  std::size_t skipped_pairs = 0;
};

// Scores every base sample against the target model and writes
// <prefix>.scores.csv, <prefix>.roc.csv, <prefix>.summary.txt and
// <prefix>.provenance.txt.
inline AuditOutcome RunAudit(const RunConfig& run) {
  if (run.out_prefix.empty()) ThrowValidation("no output prefix given");
  const LoadedInputs inputs = LoadInputs(run);
  const AuditDataset dataset = BuildDataset(inputs, run.target, run.references);
  const ScoredQueries scored = ScoreQueries(run, dataset, dataset.BaseSamples(), run.workers);

  AuditOutcome outcome;
  outcome.report = BuildReport(run, dataset, scored);
  outcome.roc = ComputeRoc(outcome.report);
  outcome.summary = Summarize(outcome.roc);
  outcome.skipped_pairs = scored.skipped_pairs;

  WriteFile(WithSuffix(run.out_prefix, ".scores.csv"), EmitScoreReportCsv(outcome.report));
  WriteFile(WithSuffix(run.out_prefix, ".roc.csv"), EmitRocCsv(outcome.roc));
  WriteFile(WithSuffix(run.out_prefix, ".summary.txt"),
            EmitSummary(outcome.report, outcome.summary) +
                "skipped_pairs=" + std::to_string(outcome.skipped_pairs) + "\n");
  WriteFile(WithSuffix(run.out_prefix, ".provenance.txt"),
            ProvenanceText("audit", CanonicalConfig(run, dataset), &inputs, &run));
  return outcome;
}

struct CompareRow {
  std::string attack;
  std::string target_model;
  MetricSummary metrics;
};

struct CompareOutcome {
  std::vector<CompareRow> rows;                                      // per target
  std::vector<std::pair<std::string, AggregateSummary>> aggregates;  // per attack
};

inline std::string EmitCompareCsv(const CompareOutcome& c) {
  std::string out = "attack,target_model,auc,tpr_at_fpr_1e-4,tpr_at_fpr_0\n";
  for (const auto& row : c.rows) {
    out += row.attack + "," + row.target_model + "," + FormatDouble(row.metrics.auc) + "," +
           FormatDouble(row.metrics.tpr_at_low_fpr) + "," +
           FormatDouble(row.metrics.tpr_at_zero_fpr) + "\n";
  }
  return out;
}

inline std::string EmitCompareAggregateCsv(const CompareOutcome& c) {
  std::string out =
      "attack,n_targets,auc_mean,auc_std,tpr_at_fpr_1e-4_mean,tpr_at_fpr_1e-4_std,"
      "tpr_at_fpr_0_mean,tpr_at_fpr_0_std\n";
  for (const auto& [attack, agg] : c.aggregates) {
    out += attack + "," + std::to_string(agg.count) + "," + FormatDouble(agg.mean.auc) + "," +
           FormatDouble(agg.stddev.auc) + "," + FormatDouble(agg.mean.tpr_at_low_fpr) + "," +
           FormatDouble(agg.stddev.tpr_at_low_fpr) + "," +
           FormatDouble(agg.mean.tpr_at_zero_fpr) + "," +
           FormatDouble(agg.stddev.tpr_at_zero_fpr) + "\n";
  }
  return out;
}

// Runs each attack against each target (references default to every other
// model) and writes <prefix>.compare.csv, <prefix>.compare_aggregate.csv and
// <prefix>.provenance.txt.
inline CompareOutcome RunCompare(const RunConfig& base, const std::vector<AttackKind>& attacks,
                                 const std::vector<std::string>& targets) {
  if (base.out_prefix.empty()) ThrowValidation("no output prefix given");
  if (attacks.empty()) ThrowValidation("no attacks to compare");
  if (targets.empty()) ThrowValidation("no target models given");
  const LoadedInputs inputs = LoadInputs(base);

  CompareOutcome outcome;
  std::vector<std::vector<MetricSummary>> per_attack(attacks.size());
  std::string config;
  for (const auto& target : targets) {
    const AuditDataset dataset = BuildDataset(inputs, target, base.references);
    for (std::size_t a = 0; a < attacks.size(); ++a) {
      RunConfig run = base;
      run.attack = attacks[a];
      const ScoredQueries scored = ScoreQueries(run, dataset, dataset.BaseSamples(), run.workers);
      const ScoreReport report = BuildReport(run, dataset, scored);
      const MetricSummary m = Summarize(ComputeRoc(report));
      outcome.rows.push_back({report.attack, report.target_model, m});
      per_attack[a].push_back(m);
      config += "[" + report.attack + "@" + report.target_model + "]\n" +
                CanonicalConfig(run, dataset);
    }
  }
  for (std::size_t a = 0; a < attacks.size(); ++a) {
    outcome.aggregates.emplace_back(std::string(AttackName(attacks[a])), Aggregate(per_attack[a]));
  }
  WriteFile(WithSuffix(base.out_prefix, ".compare.csv"), EmitCompareCsv(outcome));
  WriteFile(WithSuffix(base.out_prefix, ".compare_aggregate.csv"),
            EmitCompareAggregateCsv(outcome));
  WriteFile(WithSuffix(base.out_prefix, ".provenance.txt"),
            ProvenanceText("compare", config, &inputs, &base));
  return outcome;
}

// start:stop:step with step > 0 and stop >= start, or start == stop.
inline std::vector<double> ParseGrid(std::string_view text) {
  const auto parts = SplitView(text, ':');
  if (parts.size() != 3) ThrowValidation("grid must be start:stop:step");
  const auto start = ParseDouble(parts[0]);
  const auto stop = ParseDouble(parts[1]);
  const auto step = ParseDouble(parts[2]);
  if (!start || !stop || !step || !std::isfinite(*start) || !std::isfinite(*stop) ||
      !std::isfinite(*step)) {
    ThrowValidation("grid values must be finite numbers");
  }
  if (*start == *stop) return {*start};
  if (!(*step > 0.0) || *stop < *start) ThrowValidation("degenerate grid: " + std::string(text));
  std::vector<double> grid;
  const auto count = static_cast<std::size_t>(std::floor((*stop - *start) / *step + 1e-9)) + 1;
  if (count > 1000000) ThrowValidation("grid too large");
  for (std::size_t k = 0; k < count; ++k) {
    const double v = *start + static_cast<double>(k) * *step;
    grid.push_back(std::round(v * 1e12) / 1e12);
  }
  return grid;
}

inline std::string EmitCalibrationCsv(const CalibrationResult& c) {
  std::string out = "a,auc\n";
  for (std::size_t k = 0; k < c.grid.size(); ++k) {
    out += FormatDouble(c.grid[k]) + "," + FormatDouble(c.aucs[k]) + "\n";
  }
  return out;
}

// Attacks model_i using model_j as the sole reference. The single-reference
// fallback (swap the audit's target and its one reference) is the caller's
// choice of (model_i, model_j).
inline CalibrationResult RunCalibrate(const RunConfig& run, const std::string& model_i,
                                      const std::string& model_j, std::string_view grid_text) {
  const std::vector<double> grid = ParseGrid(grid_text);
  const LoadedInputs inputs = LoadInputs(run);
  const std::size_t i = ResolveModel(inputs.signals, model_i);
  const std::size_t j = ResolveModel(inputs.signals, model_j);
  CalibrationResult result = CalibrateOfflineA(inputs.signals, inputs.membership,
                                               inputs.augmentations, i, j, grid,
                                               run.confidence, run.rmia);
  if (!run.out_prefix.empty()) {
    WriteFile(WithSuffix(run.out_prefix, ".calibration.csv"), EmitCalibrationCsv(result));
    std::string config = "model_i=" + inputs.signals.model_ids()[i] + "\nmodel_j=" +
                         inputs.signals.model_ids()[j] + "\ngrid=" + std::string(grid_text) +
                         "\nbest_a=" + FormatDouble(result.best_a) + "\n";
    WriteFile(WithSuffix(run.out_prefix, ".provenance.txt"),
              ProvenanceText("calibrate-a", config, &inputs, &run));
  }
  return result;
}

// Writes <prefix>.signals.{csv,raw}, <prefix>.membership.csv and
// <prefix>.provenance.txt.
inline GameOutput RunSimulate(const GameConfig& cfg, const std::filesystem::path& prefix,
                              SignalFormat format) {
  if (prefix.empty()) ThrowValidation("no output prefix given");
  GameOutput game = SimulateGame(cfg);
  const auto signals_path =
      WithSuffix(prefix, format == SignalFormat::kCsv ? ".signals.csv" : ".signals.raw");
  const std::string signal_bytes = EmitSignals(game.signals, format);
  const std::string membership_bytes = EmitMembershipCsv(game.membership, game.signals);
  WriteFile(signals_path, signal_bytes);
  WriteFile(WithSuffix(prefix, ".membership.csv"), membership_bytes);
  std::string prov = "command=simulate\n" + cfg.ToKeyValue();
  prov += "ood_rows=" + std::to_string(game.ood_rows) + "\n";
  prov += "output.signals.fnv1a64=" + HexDigest(Fnv1a64(signal_bytes)) + "\n";
  prov += "output.membership.fnv1a64=" + HexDigest(Fnv1a64(membership_bytes)) + "\n";
  WriteFile(WithSuffix(prefix, ".provenance.txt"), prov);
  return game;
}

}  // namespace mia_audit
