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

// Evaluation of membership scores as a threshold test: predict "member" iff
// score >= beta. Sweeping beta over every distinct score gives the ROC curve.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mia_audit/error.hpp"
#include "mia_audit/text_io.hpp"

namespace mia_audit {

struct ScoreRow {
  std::string sample_id;
  double score = 0.0;
  bool is_member = false;
};

struct ScoreReport {
  std::string attack;
  std::string target_model;
  std::string config_digest;
  std::vector<ScoreRow> rows;

  std::size_t members() const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [](const ScoreRow& r) { return r.is_member; }));
  }

  void Validate() const {
    for (const auto& row : rows) {
      if (!std::isfinite(row.score)) {
        ThrowValidation("non-finite score for sample " + row.sample_id);
      }
    }
    const std::size_t m = members();
    if (m == 0 || m == rows.size()) {
      ThrowPrecondition("score report needs at least one member and one non-member");
    }
  }
};

// Parallel arrays. Point 0 is the +inf threshold at (0, 0); point k > 0 uses
// the k-th largest distinct score. The last point is always (1, 1), so a -inf
// threshold would repeat it and is not stored.
struct RocCurve {
  std::vector<double> fpr;
  std::vector<double> tpr;
  std::vector<double> thresholds;

  std::size_t size() const { return fpr.size(); }
};

// is_member[i] != 0 marks a member.
inline RocCurve RocFromScores(std::span<const double> scores,
                              std::span<const std::uint8_t> is_member) {
  const std::size_t n = scores.size();
  std::size_t positives = 0;
  for (auto m : is_member) positives += m ? 1 : 0;
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    ThrowPrecondition("ROC needs at least one member and one non-member");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  });

  RocCurve curve;
  curve.fpr.push_back(0.0);
  curve.tpr.push_back(0.0);
  curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < n;) {
    const double beta = scores[order[k]];
    while (k < n && scores[order[k]] == beta) {
      (is_member[order[k]] ? tp : fp) += 1;
      ++k;
    }
    curve.fpr.push_back(static_cast<double>(fp) / static_cast<double>(negatives));
    curve.tpr.push_back(static_cast<double>(tp) / static_cast<double>(positives));
    curve.thresholds.push_back(beta);
  }
  return curve;
}

inline RocCurve ComputeRoc(const ScoreReport& report) {
  report.Validate();
  std::vector<double> scores;
  std::vector<std::uint8_t> members;
  scores.reserve(report.rows.size());
  members.reserve(report.rows.size());
  for (const auto& row : report.rows) {
    scores.push_back(row.score);
    members.push_back(row.is_member);
  }
  return RocFromScores(scores, members);
}

// Trapezoidal area under the curve.
inline double Auc(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t k = 1; k < curve.size(); ++k) {
    area += (curve.fpr[k] - curve.fpr[k - 1]) * (curve.tpr[k] + curve.tpr[k - 1]) * 0.5;
  }
  return area;
}

// Largest TPR among curve points with FPR <= level.
inline double TprAtFpr(const RocCurve& curve, double level) {
  double best = 0.0;
  for (std::size_t k = 0; k < curve.size(); ++k) {
    if (curve.fpr[k] <= level) best = std::max(best, curve.tpr[k]);
  }
  return best;
}

inline constexpr double kLowFprLevel = 1e-4;

struct MetricSummary {
  double auc = 0.0;
  double tpr_at_low_fpr = 0.0;   // TPR at FPR <= 1e-4
  double tpr_at_zero_fpr = 0.0;  // TPR before the first false positive
};

inline MetricSummary Summarize(const RocCurve& curve) {
  return {Auc(curve), TprAtFpr(curve, kLowFprLevel), TprAtFpr(curve, 0.0)};
}

struct AggregateSummary {
  MetricSummary mean;
  MetricSummary stddev;  // population standard deviation
  std::size_t count = 0;
};

inline AggregateSummary Aggregate(std::span<const MetricSummary> reports) {
  if (reports.empty()) ThrowValidation("cannot aggregate an empty list of reports");
  const double n = static_cast<double>(reports.size());
  auto stats = [&](double MetricSummary::*field, double& mean, double& sd) {
    double sum = 0.0;
    for (const auto& r : reports) sum += r.*field;
    mean = sum / n;
    double sq = 0.0;
    for (const auto& r : reports) sq += (r.*field - mean) * (r.*field - mean);
    sd = std::sqrt(sq / n);
  };
  AggregateSummary out;
  out.count = reports.size();
  stats(&MetricSummary::auc, out.mean.auc, out.stddev.auc);
  stats(&MetricSummary::tpr_at_low_fpr, out.mean.tpr_at_low_fpr, out.stddev.tpr_at_low_fpr);
  stats(&MetricSummary::tpr_at_zero_fpr, out.mean.tpr_at_zero_fpr, out.stddev.tpr_at_zero_fpr);
  return out;
}

// ---------------------------------------------------------------------------
// Output formats.

inline std::string EmitScoreReportCsv(const ScoreReport& report) {
  std::string out;
  out += "# attack=" + report.attack + "\n";
  out += "# target_model=" + report.target_model + "\n";
  out += "# config_digest=" + report.config_digest + "\n";
  out += "sample_id,score,is_member\n";
  for (const auto& row : report.rows) {
    out += row.sample_id + "," + FormatDouble(row.score) + (row.is_member ? ",1\n" : ",0\n");
  }
  return out;
}

inline ScoreReport ParseScoreReportCsv(std::string_view text) {
  ScoreReport report;
  bool header_seen = false;
  for (auto line : SplitLines(text)) {
    if (line.starts_with("# ")) {
      const auto body = line.substr(2);
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const auto key = body.substr(0, eq);
      const std::string value(body.substr(eq + 1));
      if (key == "attack") report.attack = value;
      if (key == "target_model") report.target_model = value;
      if (key == "config_digest") report.config_digest = value;
      continue;
    }
    if (!header_seen) {
      if (line != "sample_id,score,is_member") ThrowValidation("malformed score report header");
      header_seen = true;
      continue;
    }
    const auto cells = SplitView(line, ',');
    if (cells.size() != 3) ThrowValidation("malformed score report row");
    auto score = ParseDouble(cells[1]);
    if (!score || (cells[2] != "0" && cells[2] != "1")) {
      ThrowValidation("malformed score report row for " + std::string(cells[0]));
    }
    report.rows.push_back({std::string(cells[0]), *score, cells[2] == "1"});
  }
  return report;
}

inline std::string EmitRocCsv(const RocCurve& curve) {
  std::string out = "beta,fpr,tpr\n";
  for (std::size_t k = 0; k < curve.size(); ++k) {
    out += FormatDouble(curve.thresholds[k]) + "," + FormatDouble(curve.fpr[k]) + "," +
           FormatDouble(curve.tpr[k]) + "\n";
  }
  return out;
}

inline std::string EmitSummary(const ScoreReport& report, const MetricSummary& m) {
  std::string out;
  out += "attack=" + report.attack + "\n";
  out += "target_model=" + report.target_model + "\n";
  out += "config_digest=" + report.config_digest + "\n";
  out += "n_members=" + std::to_string(report.members()) + "\n";
  out += "n_non_members=" + std::to_string(report.rows.size() - report.members()) + "\n";
  out += "auc=" + FormatDouble(m.auc) + "\n";
  out += "tpr_at_fpr_1e-4=" + FormatDouble(m.tpr_at_low_fpr) + "\n";
  out += "tpr_at_fpr_0=" + FormatDouble(m.tpr_at_zero_fpr) + "\n";
  return out;
}

inline std::string SummaryLine(const ScoreReport& report, const MetricSummary& m) {
  return report.attack + " target=" + report.target_model + " auc=" + FormatDouble(m.auc) +
         " tpr@1e-4=" + FormatDouble(m.tpr_at_low_fpr) +
         " tpr@0=" + FormatDouble(m.tpr_at_zero_fpr);
}

}  // namespace mia_audit
