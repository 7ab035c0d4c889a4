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

// End-to-end tests of the mia_audit command-line tool.

#include "mia_audit/audit.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace mia_audit {
namespace {

namespace fs = std::filesystem;
using ::testing::HasSubstr;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("mia_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string P(const std::string& name) const { return (dir_ / name).string(); }

  // Runs the tool; stdout and stderr land in out_ and err_.
  int Run(const std::string& args) {
    const std::string cmd = std::string(MIA_AUDIT_CLI) + " " + args + " >" + P("stdout.txt") +
                            " 2>" + P("stderr.txt");
    const int status = std::system(cmd.c_str());
    out_ = ReadFile(P("stdout.txt"));
    err_ = ReadFile(P("stderr.txt"));
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  // Writes a game under prefix `name`; returns the signals path.
  std::string Simulate(const std::string& name, const std::string& extra = "") {
    EXPECT_EQ(Run("simulate --n-samples 400 --n-models 8 --seed 3 --member-shift 2 --out " +
                  P(name) + " " + extra),
              0)
        << err_;
    return P(name + ".signals.csv");
  }

  std::string Inputs(const std::string& name) {
    return "--signals " + P(name + ".signals.csv") + " --membership " + P(name + ".membership.csv");
  }

  static std::map<std::string, std::string> KeyValues(const std::string& text) {
    std::map<std::string, std::string> kv;
    for (auto line : SplitLines(text)) {
      const auto eq = line.find('=');
      if (eq != std::string_view::npos) {
        kv[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 1));
      }
    }
    return kv;
  }

  fs::path dir_;
  std::string out_;
  std::string err_;
};

TEST_F(CliTest, AuditWritesOutputs) {
  Simulate("g");
  ASSERT_EQ(Run("audit --attack rmia --mode offline --gamma 2.0 --a 0.3 --target m0 " +
                Inputs("g") + " --out " + P("run")),
            0)
      << err_;
  for (const char* suffix : {".scores.csv", ".roc.csv", ".summary.txt", ".provenance.txt"}) {
    EXPECT_TRUE(fs::exists(P(std::string("run") + suffix))) << suffix;
  }
  const auto summary = KeyValues(ReadFile(P("run.summary.txt")));
  const double auc = std::stod(summary.at("auc"));
  EXPECT_GE(auc, 0.0);
  EXPECT_LE(auc, 1.0);
  EXPECT_GT(auc, 0.6);
  EXPECT_EQ(summary.at("attack"), "rmia");
  EXPECT_THAT(out_, HasSubstr("auc="));

  const auto prov = KeyValues(ReadFile(P("run.provenance.txt")));
  EXPECT_EQ(prov.at("gamma"), "2");
  EXPECT_EQ(prov.at("a"), "0.3");
  EXPECT_EQ(prov.at("input.signals.fnv1a64"),
            HexDigest(Fnv1a64(ReadFile(P("g.signals.csv")))));
  const ScoreReport report = ParseScoreReportCsv(ReadFile(P("run.scores.csv")));
  EXPECT_EQ(report.rows.size(), 400u);
  EXPECT_EQ(report.config_digest, summary.at("config_digest"));
}

TEST_F(CliTest, MissingMembershipIsValidationError) {
  Simulate("g");
  EXPECT_EQ(Run("audit --target m0 --signals " + P("g.signals.csv") + " --membership " +
                P("absent.csv") + " --out " + P("run")),
            2);
  EXPECT_THAT(err_, HasSubstr("absent.csv"));
  EXPECT_EQ(Run("audit --target m0 --signals " + P("g.signals.csv") + " --out " + P("run")), 2);
}

TEST_F(CliTest, OnlineWithoutInReferencesIsPreconditionError) {
  // s0 is IN only for the target; the single reference m1 never trains on it.
  WriteFile(P("s.csv"), "#kind=probability\nm0,m1\ns0,0.9,0.4\ns1,0.3,0.5\ns2,0.2,0.6\n");
  WriteFile(P("m.csv"), "m0,m1\ns0,1,0\ns1,0,1\ns2,0,0\n");
  EXPECT_EQ(Run("audit --attack rmia --mode online --target m0 --signals " + P("s.csv") +
                " --membership " + P("m.csv") + " --out " + P("run")),
            3);
  EXPECT_THAT(err_, HasSubstr("online mode unavailable for query s0"));
}

TEST_F(CliTest, BadFlagValuesAreValidationErrors) {
  Simulate("g");
  EXPECT_EQ(Run("audit --target m0 --mode sideways " + Inputs("g") + " --out " + P("r")), 2);
  EXPECT_EQ(Run("audit --target m0 --gamma 0.5 " + Inputs("g") + " --out " + P("r")), 2);
  EXPECT_EQ(Run("audit --target nope " + Inputs("g") + " --out " + P("r")), 2);
  EXPECT_EQ(Run("audit --target m0 --no-such-flag 1 " + Inputs("g") + " --out " + P("r")), 2);
}

TEST_F(CliTest, SimulateIsDeterministic) {
  ASSERT_EQ(Run("simulate --n-samples 1000 --n-models 8 --seed 7 --out " + P("a")), 0);
  ASSERT_EQ(Run("simulate --n-samples 1000 --n-models 8 --seed 7 --out " + P("b")), 0);
  for (const char* suffix : {".signals.csv", ".membership.csv", ".provenance.txt"}) {
    EXPECT_EQ(ReadFile(P(std::string("a") + suffix)), ReadFile(P(std::string("b") + suffix)));
  }
  ASSERT_EQ(Run("simulate --n-samples 50 --n-models 4 --format raw --out " + P("r")), 0);
  EXPECT_TRUE(fs::exists(P("r.signals.raw")));
  const SignalMatrix raw = LoadSignals(P("r.signals.raw"), SignalFormat::kRaw);
  EXPECT_EQ(raw.rows(), 50u);
}

TEST_F(CliTest, SimulateRejectsOddModelCount) {
  EXPECT_EQ(Run("simulate --n-models 7 --out " + P("a")), 2);
  EXPECT_EQ(Run("simulate --noise-sigma 0 --out " + P("a")), 2);
}

TEST_F(CliTest, DefaultSimulationLoadsInAudit) {
  ASSERT_EQ(Run("simulate --out " + P("d")), 0);
  EXPECT_EQ(Run("audit --target 0 --signals " + P("d.signals.csv") + " --membership " +
                P("d.membership.csv") + " --out " + P("run")),
            0)
      << err_;
}

std::vector<std::pair<double, double>> CalibrationTable(const std::string& out) {
  std::vector<std::pair<double, double>> rows;
  for (auto line : SplitLines(out)) {
    if (line == "a,auc" || line.starts_with("chosen_a=")) continue;
    const auto cells = SplitView(line, ',');
    rows.emplace_back(*ParseDouble(cells[0]), *ParseDouble(cells[1]));
  }
  return rows;
}

double ChosenA(const std::string& out) {
  const auto pos = out.find("chosen_a=");
  return std::stod(out.substr(pos + 9));
}

TEST_F(CliTest, CalibrateGrid) {
  Simulate("g");
  ASSERT_EQ(Run("calibrate-a --model-i m0 --model-j m1 --grid 0:1:0.25 " + Inputs("g")), 0)
      << err_;
  const auto table = CalibrationTable(out_);
  ASSERT_EQ(table.size(), 5u);
  EXPECT_EQ(table[0].first, 0.0);
  EXPECT_EQ(table[4].first, 1.0);
  double best_auc = -1.0, best_a = -1.0;
  for (const auto& [a, auc] : table) {
    if (auc > best_auc) {
      best_auc = auc;
      best_a = a;
    }
  }
  EXPECT_EQ(ChosenA(out_), best_a);

  ASSERT_EQ(Run("calibrate-a --model-i m0 --model-j m1 --grid 0.3:0.3:0.1 " + Inputs("g")), 0);
  ASSERT_EQ(CalibrationTable(out_).size(), 1u);
  EXPECT_EQ(ChosenA(out_), 0.3);

  EXPECT_EQ(Run("calibrate-a --model-i m0 --model-j m1 --grid 1:0:0.1 " + Inputs("g")), 2);
  EXPECT_EQ(Run("calibrate-a --model-i m0 --model-j m1 --grid 0:1:0 " + Inputs("g")), 2);
}

TEST_F(CliTest, CalibrateSingleReferenceSwapsRoles) {
  Simulate("g");
  ASSERT_EQ(Run("calibrate-a --single-reference --target m0 --reference m1 --grid 0:1:0.5 " +
                Inputs("g") + " --out " + P("c")),
            0)
      << err_;
  const auto prov = KeyValues(ReadFile(P("c.provenance.txt")));
  EXPECT_EQ(prov.at("model_i"), "m1");
  EXPECT_EQ(prov.at("model_j"), "m0");
}

TEST_F(CliTest, CompareAllAttacks) {
  Simulate("g");
  ASSERT_EQ(Run("compare --target m0 --z-subsample 100 " + Inputs("g") + " --out " + P("c")), 0)
      << err_;
  const std::string first = ReadFile(P("c.compare.csv"));
  const auto lines = SplitLines(first);
  ASSERT_EQ(lines.size(), 6u);
  EXPECT_EQ(lines[0], "attack,target_model,auc,tpr_at_fpr_1e-4,tpr_at_fpr_0");
  std::vector<std::string> names;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    names.emplace_back(SplitView(lines[k], ',')[0]);
  }
  EXPECT_EQ(names,
            (std::vector<std::string>{"rmia", "rmia_direct", "lira", "attack_p", "attack_r"}));
  ASSERT_EQ(Run("compare --target m0 --z-subsample 100 " + Inputs("g") + " --out " + P("c")), 0);
  EXPECT_EQ(ReadFile(P("c.compare.csv")), first);
}

double CompareAuc(const std::string& csv, std::size_t row) {
  const auto lines = SplitLines(csv);
  return *ParseDouble(SplitView(lines[row], ',')[2]);
}

TEST_F(CliTest, CompareNullAndSeparatedGames) {
  // The direct attack needs many references before its class fits stop
  // leaking the target's membership through class sizes alone.
  ASSERT_EQ(Run("simulate --n-samples 2000 --n-models 64 --member-shift 0 --seed 5 --out " +
                P("null")),
            0);
  ASSERT_EQ(Run("compare --target m0 --z-subsample 200 " + Inputs("null") + " --out " + P("n")),
            0)
      << err_;
  const std::string null_csv = ReadFile(P("n.compare.csv"));
  for (std::size_t row = 1; row <= 5; ++row) {
    EXPECT_NEAR(CompareAuc(null_csv, row), 0.5, 0.03) << SplitLines(null_csv)[row];
  }

  ASSERT_EQ(Run("simulate --n-samples 2000 --n-models 8 --member-shift 4 --noise-sigma 0.5 "
                "--seed 5 --out " +
                P("sep")),
            0);
  ASSERT_EQ(Run("compare --target m0 --z-subsample 200 " + Inputs("sep") + " --out " + P("s")),
            0)
      << err_;
  const std::string sep_csv = ReadFile(P("s.compare.csv"));
  for (std::size_t row = 1; row <= 5; ++row) {
    EXPECT_GT(CompareAuc(sep_csv, row), 0.9) << SplitLines(sep_csv)[row];
  }
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
  Simulate("g");
  WriteFile(P("run.cfg"),
            "# audit settings\nattack = rmia\nmode=online\ngamma=4\nz_subsample=100\n");
  ASSERT_EQ(Run("audit --config " + P("run.cfg") + " --gamma 1.5 --target m0 " + Inputs("g") +
                " --out " + P("run")),
            0)
      << err_;
  const auto prov = KeyValues(ReadFile(P("run.provenance.txt")));
  EXPECT_EQ(prov.at("mode"), "online");
  EXPECT_EQ(prov.at("gamma"), "1.5");
  EXPECT_EQ(prov.at("z_subsample"), "100");

  WriteFile(P("bad.cfg"), "gamma=2\nbogus_key=1\n");
  EXPECT_EQ(Run("audit --config " + P("bad.cfg") + " --target m0 " + Inputs("g") + " --out " +
                P("run")),
            2);
  EXPECT_THAT(err_, HasSubstr("bogus_key"));
}

TEST_F(CliTest, SimulateConfigFile) {
  WriteFile(P("game.cfg"), "n_samples=30\nn_models=4\nseed=11\n");
  ASSERT_EQ(Run("simulate --config " + P("game.cfg") + " --seed 12 --out " + P("x")), 0) << err_;
  const auto prov = KeyValues(ReadFile(P("x.provenance.txt")));
  EXPECT_EQ(prov.at("n_samples"), "30");
  EXPECT_EQ(prov.at("seed"), "12");
}

TEST_F(CliTest, WorkerCountDoesNotChangeOutput) {
  Simulate("g");
  ASSERT_EQ(Run("audit --attack lira --workers 1 --target m0 " + Inputs("g") + " --out " + P("a")),
            0);
  ASSERT_EQ(Run("audit --attack lira --workers 4 --target m0 " + Inputs("g") + " --out " + P("b")),
            0);
  for (const char* suffix : {".scores.csv", ".roc.csv", ".summary.txt", ".provenance.txt"}) {
    EXPECT_EQ(ReadFile(P(std::string("a") + suffix)), ReadFile(P(std::string("b") + suffix)));
  }
}

TEST(ParseGridTest, Arithmetic) {
  EXPECT_EQ(ParseGrid("0:1:0.25"), (std::vector<double>{0, 0.25, 0.5, 0.75, 1}));
  EXPECT_EQ(ParseGrid("0:1:0.1").size(), 11u);
  EXPECT_EQ(ParseGrid("0:1:0.1")[3], 0.3);
  EXPECT_EQ(ParseGrid("0.3:0.3:0.1"), (std::vector<double>{0.3}));
  EXPECT_THROW(ParseGrid("0:1"), AuditError);
  EXPECT_THROW(ParseGrid("1:0:0.1"), AuditError);
}

}  // namespace
}  // namespace mia_audit
