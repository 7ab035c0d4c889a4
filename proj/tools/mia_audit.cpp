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

// mia_audit: audit, simulate, calibrate-a and compare.
//
// Exit codes: 0 success, 2 invalid configuration or input, 3 the data cannot
// support the requested attack.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mia_audit/audit.hpp"

namespace {

using namespace mia_audit;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPrecondition = 3;

std::size_t DefaultWorkers() {
  if (const char* env = std::getenv("MIA_AUDIT_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (...) {
    }
    std::cerr << "ignoring invalid MIA_AUDIT_WORKERS=" << env << "\n";
  }
  return 1;
}

// Flag values as parsed, before translation into RunConfig.
struct RunFlags {
  std::string signals, signals_format = "auto", membership, augmentations;
  std::string target;
  std::vector<std::string> references;
  std::string attack = "rmia";
  std::string mode = "offline";
  double gamma = 2.0;
  double a = 0.3;
  std::string z_prior = "plain_mean";
  std::string dominance = "strict";
  std::size_t z_subsample = 0;  // 0: use every population sample
  bool voting = false;
  std::string confidence = "identity";
  double temperature = 1.0;
  int taylor_order = 4;
  double soft_margin = 0.6;
  std::string lira_mode = "offline";
  std::string lira_variance = "per_sample";
  std::size_t lira_global_threshold = 64;
  std::uint64_t seed = 0;
  std::size_t workers = 0;  // 0: MIA_AUDIT_WORKERS or 1
  std::string out;
  std::string config;
};

template <typename Enum>
Enum Lookup(const std::map<std::string, Enum>& table, const std::string& value,
            const std::string& flag) {
  auto it = table.find(value);
  if (it == table.end()) ThrowValidation("invalid value for --" + flag + ": " + value);
  return it->second;
}

RunConfig ToRunConfig(const RunFlags& f) {
  RunConfig run;
  run.attack = ParseAttackKind(f.attack);
  run.rmia.mode = Lookup<AttackMode>(
      {{"online", AttackMode::kOnline}, {"offline", AttackMode::kOffline}}, f.mode, "mode");
  run.rmia.gamma = f.gamma;
  run.rmia.offline_a = f.a;
  run.rmia.z_prior_mode = Lookup<ZPriorMode>(
      {{"plain_mean", ZPriorMode::kPlainMean}, {"offline_rescale", ZPriorMode::kOfflineRescale}},
      f.z_prior, "z-prior");
  run.rmia.dominance = Lookup<Dominance>(
      {{"strict", Dominance::kStrict}, {"non_strict", Dominance::kNonStrict}}, f.dominance,
      "dominance");
  if (f.z_subsample > 0) run.rmia.z_subsample = f.z_subsample;
  run.rmia.voting = f.voting;
  run.rmia.seed = f.seed;
  run.rmia.Validate();

  run.confidence.function = Lookup<ConfidenceFunction>(
      {{"softmax", ConfidenceFunction::kSoftmax},
       {"taylor_softmax", ConfidenceFunction::kTaylorSoftmax},
       {"sm_softmax", ConfidenceFunction::kSmSoftmax},
       {"sm_taylor_softmax", ConfidenceFunction::kSmTaylorSoftmax},
       {"identity", ConfidenceFunction::kIdentity}},
      f.confidence, "confidence");
  run.confidence.temperature = f.temperature;
  run.confidence.taylor_order = f.taylor_order;
  run.confidence.soft_margin = f.soft_margin;
  run.confidence.Validate();

  run.lira.mode = Lookup<AttackMode>(
      {{"online", AttackMode::kOnline}, {"offline", AttackMode::kOffline}}, f.lira_mode,
      "lira-mode");
  run.lira.variance_mode = Lookup<LiraVarianceMode>(
      {{"per_sample", LiraVarianceMode::kPerSample}, {"global", LiraVarianceMode::kGlobal}},
      f.lira_variance, "lira-variance");
  run.lira.global_threshold = f.lira_global_threshold;
  run.lira.Validate();

  run.signals_path = f.signals;
  if (f.signals_format == "csv") {
    run.signals_format = SignalFormat::kCsv;
  } else if (f.signals_format == "raw") {
    run.signals_format = SignalFormat::kRaw;
  } else if (f.signals_format != "auto") {
    ThrowValidation("invalid value for --signals-format: " + f.signals_format);
  }
  run.membership_path = f.membership;
  run.augmentations_path = f.augmentations;
  run.target = f.target;
  run.references = f.references;
  run.out_prefix = f.out;
  run.workers = f.workers > 0 ? f.workers : DefaultWorkers();
  return run;
}

void AddInputFlags(CLI::App* app, RunFlags& f) {
  app->add_option("--signals", f.signals, "Signals file (CSV or raw)");
  app->add_option("--signals-format", f.signals_format, "csv, raw or auto (by extension)");
  app->add_option("--membership", f.membership, "Membership CSV");
  app->add_option("--augmentations", f.augmentations, "Augmentation map CSV");
  app->add_option("--confidence", f.confidence,
                  "identity, softmax, taylor_softmax, sm_softmax, sm_taylor_softmax");
  app->add_option("--temperature", f.temperature, "Softmax temperature");
  app->add_option("--taylor-order", f.taylor_order, "Taylor expansion order");
  app->add_option("--soft-margin", f.soft_margin, "Soft margin");
  app->add_option("--workers", f.workers, "Worker threads (default MIA_AUDIT_WORKERS or 1)");
  app->add_option("--out", f.out, "Output prefix");
  app->add_option("--config", f.config, "Flat key=value config file; flags override it");
}

void AddAttackFlags(CLI::App* app, RunFlags& f) {
  app->add_option("--target", f.target, "Target model id or column index");
  app->add_option("--references", f.references, "Reference model ids (default: all others)")
      ->delimiter(',');
  app->add_option("--mode", f.mode, "RMIA prior: online or offline");
  app->add_option("--gamma", f.gamma, "Dominance threshold (>= 1)");
  app->add_option("--a", f.a, "Offline prior factor in [0, 1]");
  app->add_option("--z-prior", f.z_prior, "plain_mean or offline_rescale");
  app->add_option("--dominance", f.dominance, "strict or non_strict");
  app->add_option("--z-subsample", f.z_subsample, "Population subsample size (0: all)");
  app->add_option("--voting", f.voting, "Majority vote over augmentation groups");
  app->add_option("--lira-mode", f.lira_mode, "LiRA: online or offline");
  app->add_option("--lira-variance", f.lira_variance, "LiRA: per_sample or global");
  app->add_option("--lira-global-threshold", f.lira_global_threshold,
                  "Per-sample LiRA variance needs this many models per class");
  app->add_option("--seed", f.seed, "Seed for population subsampling");
}

// Flat key=value file; each key names a long flag of the subcommand. Values
// fill only the options that were not given on the command line.
void ApplyConfigFile(CLI::App* app, const std::string& path) {
  if (path.empty()) return;
  const std::string text = ReadFile(path);
  std::size_t line_no = 0;
  for (auto line : SplitLines(text)) {
    ++line_no;
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      ThrowValidation(path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    auto trim = [](std::string_view v) {
      while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) v.remove_suffix(1);
      while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
      return std::string(v);
    };
    const std::string raw_key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    std::string key = raw_key;
    std::replace(key.begin(), key.end(), '_', '-');
    CLI::Option* opt = nullptr;
    try {
      opt = app->get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      ThrowValidation(path + ":" + std::to_string(line_no) + ": unknown key " + raw_key);
    }
    if (key == "config" || opt->count() > 0) continue;
    try {
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      ThrowValidation(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

int ExitCodeFor(const AuditError& e) {
  return e.kind() == ErrorKind::kValidation ? kExitConfig : kExitPrecondition;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Membership inference auditing over prediction-signal matrices"};
  app.require_subcommand(1);

  RunFlags audit_flags;
  auto* audit = app.add_subcommand("audit", "Score every base sample against the target model");
  AddInputFlags(audit, audit_flags);
  AddAttackFlags(audit, audit_flags);
  audit->add_option("--attack", audit_flags.attack,
                    "rmia, rmia_direct, lira, attack_p or attack_r");

  RunFlags compare_flags;
  std::vector<std::string> compare_attacks;
  std::vector<std::string> compare_targets;
  auto* compare = app.add_subcommand("compare", "Run several attacks on the same data");
  AddInputFlags(compare, compare_flags);
  AddAttackFlags(compare, compare_flags);
  compare->add_option("--attacks", compare_attacks, "Attacks to run (default: all)")
      ->delimiter(',');
  compare->add_option("--targets", compare_targets, "Target models (default: --target)")
      ->delimiter(',');

  RunFlags calib_flags;
  std::string model_i, model_j, calib_target, calib_reference, grid = "0:1:0.1";
  bool single_reference = false;
  auto* calibrate = app.add_subcommand("calibrate-a", "Grid-search the offline prior factor a");
  AddInputFlags(calibrate, calib_flags);
  calibrate->add_option("--model-i", model_i, "Temporary target model");
  calibrate->add_option("--model-j", model_j, "Temporary reference model");
  calibrate->add_option("--target", calib_target, "Audit target (with --single-reference)");
  calibrate->add_option("--reference", calib_reference,
                        "The audit's only reference model (with --single-reference)");
  calibrate->add_flag("--single-reference", single_reference,
                      "Attack the reference model using the target as reference");
  calibrate->add_option("--grid", grid, "start:stop:step");
  calibrate->add_option("--gamma", calib_flags.gamma, "Dominance threshold (>= 1)");
  calibrate->add_option("--dominance", calib_flags.dominance, "strict or non_strict");
  calibrate->add_option("--z-subsample", calib_flags.z_subsample, "Population subsample size");
  calibrate->add_option("--seed", calib_flags.seed, "Seed for population subsampling");

  GameConfig game;
  std::string sim_out, sim_format = "csv";
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic membership game");
  simulate->add_option("--n-samples", game.n_samples, "Number of samples");
  simulate->add_option("--n-models", game.n_models, "Number of models (even)");
  simulate->add_option("--member-shift", game.member_shift, "Logit boost for members");
  simulate->add_option("--noise-sigma", game.noise_sigma, "Per-model logit noise");
  simulate->add_option("--difficulty-spread", game.difficulty_spread, "Spread of sample difficulty");
  simulate->add_option("--difficulty-mean", game.difficulty_mean, "Mean sample difficulty");
  simulate->add_option("--ood-fraction", game.ood_fraction, "Fraction of OOD query rows");
  simulate->add_option("--ood-shift", game.ood_shift, "Difficulty offset of OOD rows");
  simulate->add_option("--seed", game.seed, "Generator seed");
  simulate->add_option("--format", sim_format, "Signals format: csv or raw");
  simulate->add_option("--out", sim_out, "Output prefix");
  std::string sim_config;
  simulate->add_option("--config", sim_config, "Flat key=value config file; flags override it");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (audit->parsed()) ApplyConfigFile(audit, audit_flags.config);
    if (compare->parsed()) ApplyConfigFile(compare, compare_flags.config);
    if (calibrate->parsed()) ApplyConfigFile(calibrate, calib_flags.config);
    if (simulate->parsed()) ApplyConfigFile(simulate, sim_config);

    if (audit->parsed()) {
      const AuditOutcome outcome = RunAudit(ToRunConfig(audit_flags));
      std::cout << SummaryLine(outcome.report, outcome.summary) << "\n";
      if (outcome.skipped_pairs > 0) {
        std::cerr << "skipped " << outcome.skipped_pairs << " population pairs\n";
      }
    } else if (compare->parsed()) {
      const RunConfig run = ToRunConfig(compare_flags);
      std::vector<AttackKind> attacks;
      for (const auto& name : compare_attacks) attacks.push_back(ParseAttackKind(name));
      if (attacks.empty()) attacks.assign(std::begin(kAllAttacks), std::end(kAllAttacks));
      std::vector<std::string> targets = compare_targets;
      if (targets.empty() && !run.target.empty()) targets.push_back(run.target);
      const CompareOutcome outcome = RunCompare(run, attacks, targets);
      std::cout << EmitCompareCsv(outcome) << EmitCompareAggregateCsv(outcome);
    } else if (calibrate->parsed()) {
      const RunConfig run = ToRunConfig(calib_flags);
      std::string temp_target = model_i, temp_reference = model_j;
      if (single_reference) {
        if (calib_target.empty() || calib_reference.empty()) {
          ThrowValidation("--single-reference needs --target and --reference");
        }
        temp_target = calib_reference;
        temp_reference = calib_target;
      }
      if (temp_target.empty() || temp_reference.empty()) {
        ThrowValidation("calibrate-a needs --model-i and --model-j");
      }
      const CalibrationResult result = RunCalibrate(run, temp_target, temp_reference, grid);
      std::cout << EmitCalibrationCsv(result) << "chosen_a=" << FormatDouble(result.best_a)
                << "\n";
    } else if (simulate->parsed()) {
      SignalFormat format;
      if (sim_format == "csv") {
        format = SignalFormat::kCsv;
      } else if (sim_format == "raw") {
        format = SignalFormat::kRaw;
      } else {
        ThrowValidation("invalid value for --format: " + sim_format);
      }
      const GameOutput out = RunSimulate(game, sim_out, format);
      std::cout << "simulated " << out.signals.rows() << " samples x " << out.signals.cols()
                << " models\n";
    }
  } catch (const AuditError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ExitCodeFor(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
