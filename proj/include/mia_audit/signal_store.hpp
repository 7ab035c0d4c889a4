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

// Signal and membership data model with file ingestion and emission.
//
// Signals CSV:
//   #kind=probability            (or #kind=logit)
//   model_a,model_b,...          (model ids)
//   sample_id,v1,...,vM          (one line per sample)
//
// Signals raw (all integers little-endian):
//   "MIAS" | u32 version=1 | u8 kind (0 probability, 1 logit) |
//   u64 n_rows | u64 n_cols | n_rows*n_cols f64, row-major
//   Raw files carry no ids; loading assigns "s<i>" and "m<j>".
//
// Membership CSV: the same grid without the kind line, cells 0 or 1.
// Augmentation CSV: `sample_id,group_id,is_base` per line, an optional
// header line with exactly those names.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mia_audit/error.hpp"
#include "mia_audit/random.hpp"
#include "mia_audit/text_io.hpp"

namespace mia_audit {

enum class SignalKind : std::uint8_t { kProbability = 0, kLogit = 1 };
enum class SignalFormat { kCsv, kRaw };

inline std::string_view KindName(SignalKind kind) {
  return kind == SignalKind::kProbability ? "probability" : "logit";
}

namespace internal {

inline void CheckIds(const std::vector<std::string>& ids, std::size_t expected,
                     std::string_view what) {
  if (ids.size() != expected) {
    ThrowValidation(std::string(what) + " id count " + std::to_string(ids.size()) +
                    " does not match dimension " + std::to_string(expected));
  }
  std::unordered_set<std::string_view> seen;
  for (const auto& id : ids) {
    if (id.empty()) ThrowValidation(std::string("empty ") + std::string(what) + " id");
    if (id.find(',') != std::string::npos) {
      ThrowValidation(std::string(what) + " id contains a comma: " + id);
    }
    if (!seen.insert(id).second) {
      ThrowValidation("duplicate " + std::string(what) + " id: " + id);
    }
  }
}

inline std::unordered_map<std::string_view, std::size_t> IndexIds(
    const std::vector<std::string>& ids) {
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], i);
  return index;
}

}  // namespace internal

// n_samples x n_models grid of per-sample model outputs. Immutable once built.
class SignalMatrix {
 public:
  static SignalMatrix Create(std::vector<double> values, std::size_t rows,
                             std::size_t cols, SignalKind kind,
                             std::vector<std::string> sample_ids,
                             std::vector<std::string> model_ids) {
    if (rows == 0 || cols == 0) ThrowValidation("signal matrix must be non-empty");
    if (values.size() != rows * cols) {
      ThrowValidation("dimension mismatch: " + std::to_string(values.size()) +
                      " values for " + std::to_string(rows) + "x" +
                      std::to_string(cols));
    }
    internal::CheckIds(sample_ids, rows, "sample");
    internal::CheckIds(model_ids, cols, "model");
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const double v = values[r * cols + c];
        if (!std::isfinite(v)) ThrowValidation("non-finite value at " + Coord(r, c));
        if (kind == SignalKind::kProbability && (v < 0.0 || v > 1.0)) {
          ThrowValidation("probability out of range at " + Coord(r, c));
        }
      }
    }
    return SignalMatrix(std::move(values), rows, cols, kind, std::move(sample_ids),
                        std::move(model_ids));
  }

  // Ids default to "s<i>" / "m<j>".
  static SignalMatrix Create(std::vector<double> values, std::size_t rows,
                             std::size_t cols, SignalKind kind) {
    return Create(std::move(values), rows, cols, kind, DefaultIds('s', rows),
                  DefaultIds('m', cols));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  SignalKind kind() const { return kind_; }
  double at(std::size_t row, std::size_t col) const { return values_[row * cols_ + col]; }
  std::span<const double> values() const { return values_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * cols_, cols_);
  }
  const std::vector<std::string>& sample_ids() const { return sample_ids_; }
  const std::vector<std::string>& model_ids() const { return model_ids_; }

  std::optional<std::size_t> FindModel(std::string_view id) const {
    auto it = std::find(model_ids_.begin(), model_ids_.end(), id);
    if (it == model_ids_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - model_ids_.begin());
  }

  static std::vector<std::string> DefaultIds(char prefix, std::size_t n) {
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
    return ids;
  }

 private:
  SignalMatrix(std::vector<double> values, std::size_t rows, std::size_t cols,
               SignalKind kind, std::vector<std::string> sample_ids,
               std::vector<std::string> model_ids)
      : values_(std::move(values)),
        rows_(rows),
        cols_(cols),
        kind_(kind),
        sample_ids_(std::move(sample_ids)),
        model_ids_(std::move(model_ids)) {}

  std::vector<double> values_;
  std::size_t rows_;
  std::size_t cols_;
  SignalKind kind_;
  std::vector<std::string> sample_ids_;
  std::vector<std::string> model_ids_;
};

// Cell (i, j) is true when sample i was in model j's training set.
class MembershipMatrix {
 public:
  // Every column must contain at least one non-member.
  static MembershipMatrix Create(std::vector<std::uint8_t> bits, std::size_t rows,
                                 std::size_t cols) {
    MembershipMatrix m = CreateUnchecked(std::move(bits), rows, cols);
    for (std::size_t c = 0; c < cols; ++c) {
      bool has_non_member = false;
      for (std::size_t r = 0; r < rows && !has_non_member; ++r) {
        has_non_member = !m.at(r, c);
      }
      if (!has_non_member) {
        ThrowValidation("model " + std::to_string(c) + " has no non-members");
      }
    }
    return m;
  }

  // Shape checks only; used for hand-built matrices in balance checks.
  static MembershipMatrix CreateUnchecked(std::vector<std::uint8_t> bits,
                                          std::size_t rows, std::size_t cols) {
    if (bits.size() != rows * cols) {
      ThrowValidation("membership dimension mismatch: " + std::to_string(bits.size()) +
                      " cells for " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    for (auto& b : bits) b = b ? 1 : 0;
    return MembershipMatrix(std::move(bits), rows, cols);
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool at(std::size_t row, std::size_t col) const { return bits_[row * cols_ + col] != 0; }
  std::span<const std::uint8_t> bits() const { return bits_; }

 private:
  MembershipMatrix(std::vector<std::uint8_t> bits, std::size_t rows, std::size_t cols)
      : bits_(std::move(bits)), rows_(rows), cols_(cols) {}

  std::vector<std::uint8_t> bits_;
  std::size_t rows_;
  std::size_t cols_;
};

// Groups of augmented rows. Every sample is in exactly one group and every
// group has exactly one base (canonical, un-augmented) sample.
class AugmentationMap {
 public:
  // group_of[i] is the group index of sample i; base_of[g] is the base sample
  // of group g.
  static AugmentationMap Create(std::vector<std::size_t> group_of,
                                std::vector<std::size_t> base_of,
                                std::vector<std::string> group_ids) {
    const std::size_t n_groups = base_of.size();
    if (group_ids.size() != n_groups) ThrowValidation("group id count mismatch");
    std::vector<std::vector<std::size_t>> members(n_groups);
    for (std::size_t i = 0; i < group_of.size(); ++i) {
      if (group_of[i] >= n_groups) {
        ThrowValidation("sample " + std::to_string(i) + " has no augmentation group");
      }
      members[group_of[i]].push_back(i);
    }
    for (std::size_t g = 0; g < n_groups; ++g) {
      if (base_of[g] >= group_of.size() || group_of[base_of[g]] != g) {
        ThrowValidation("group " + group_ids[g] + " does not contain its base sample");
      }
    }
    return AugmentationMap(std::move(group_of), std::move(base_of), std::move(members),
                           std::move(group_ids));
  }

  // One singleton group per sample.
  static AugmentationMap Identity(const std::vector<std::string>& sample_ids) {
    std::vector<std::size_t> idx(sample_ids.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return Create(idx, idx, sample_ids);
  }

  std::size_t group_count() const { return base_of_.size(); }
  std::size_t group_of(std::size_t sample) const { return group_of_[sample]; }
  std::size_t base_of(std::size_t group) const { return base_of_[group]; }
  const std::vector<std::size_t>& members(std::size_t group) const { return members_[group]; }
  const std::string& group_id(std::size_t group) const { return group_ids_[group]; }
  std::size_t sample_count() const { return group_of_.size(); }

  bool AllSingletons() const {
    return std::all_of(members_.begin(), members_.end(),
                       [](const auto& m) { return m.size() == 1; });
  }

 private:
  AugmentationMap(std::vector<std::size_t> group_of, std::vector<std::size_t> base_of,
                  std::vector<std::vector<std::size_t>> members,
                  std::vector<std::string> group_ids)
      : group_of_(std::move(group_of)),
        base_of_(std::move(base_of)),
        members_(std::move(members)),
        group_ids_(std::move(group_ids)) {}

  std::vector<std::size_t> group_of_;
  std::vector<std::size_t> base_of_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<std::string> group_ids_;
};

// Binds the target model, the reference set and the population together.
struct AuditDataset {
  SignalMatrix signals;
  MembershipMatrix membership;
  std::optional<AugmentationMap> augmentations;
  std::size_t target = 0;
  std::vector<std::size_t> references;

  static AuditDataset Create(SignalMatrix signals, MembershipMatrix membership,
                             std::optional<AugmentationMap> augmentations,
                             std::size_t target, std::vector<std::size_t> references) {
    if (membership.rows() != signals.rows() || membership.cols() != signals.cols()) {
      ThrowValidation("membership shape " + std::to_string(membership.rows()) + "x" +
                      std::to_string(membership.cols()) + " does not match signals " +
                      std::to_string(signals.rows()) + "x" +
                      std::to_string(signals.cols()));
    }
    if (target >= signals.cols()) ThrowValidation("target model index out of range");
    std::vector<bool> seen(signals.cols(), false);
    for (std::size_t r : references) {
      if (r >= signals.cols()) ThrowValidation("reference model index out of range");
      if (r == target) ThrowValidation("target model listed as a reference model");
      if (seen[r]) ThrowValidation("duplicate reference model " + signals.model_ids()[r]);
      seen[r] = true;
    }
    if (augmentations) {
      if (augmentations->sample_count() != signals.rows()) {
        ThrowValidation("augmentation map covers " +
                        std::to_string(augmentations->sample_count()) +
                        " samples, signals have " + std::to_string(signals.rows()));
      }
      for (std::size_t g = 0; g < augmentations->group_count(); ++g) {
        const std::size_t base = augmentations->base_of(g);
        for (std::size_t i : augmentations->members(g)) {
          for (std::size_t c = 0; c < signals.cols(); ++c) {
            if (membership.at(i, c) != membership.at(base, c)) {
              ThrowValidation("augmented sample " + signals.sample_ids()[i] +
                              " differs in membership from its base for model " +
                              signals.model_ids()[c]);
            }
          }
        }
      }
    }
    return AuditDataset{std::move(signals), std::move(membership), std::move(augmentations),
                        target, std::move(references)};
  }

  // All columns except the target.
  static std::vector<std::size_t> AllOtherModels(std::size_t cols, std::size_t target) {
    std::vector<std::size_t> refs;
    for (std::size_t c = 0; c < cols; ++c) {
      if (c != target) refs.push_back(c);
    }
    return refs;
  }

  std::size_t rows() const { return signals.rows(); }

  bool IsMember(std::size_t sample) const { return membership.at(sample, target); }

  bool IsBase(std::size_t sample) const {
    return !augmentations || augmentations->base_of(augmentations->group_of(sample)) == sample;
  }

  // Base samples in ascending index order.
  std::vector<std::size_t> BaseSamples() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rows(); ++i) {
      if (IsBase(i)) out.push_back(i);
    }
    return out;
  }

  // Rows of the query's augmentation group (just the query without a map).
  std::vector<std::size_t> GroupRows(std::size_t query) const {
    if (!augmentations) return {query};
    return augmentations->members(augmentations->group_of(query));
  }

  bool SameGroup(std::size_t a, std::size_t b) const {
    if (!augmentations) return a == b;
    return augmentations->group_of(a) == augmentations->group_of(b);
  }
};

// Non-members of the target, excluding the query and its augmentations, in
// ascending order. With a subsample size s the result is a seeded uniform
// s-subset (partial Fisher-Yates over the ascending candidate list, stream
// derived from (seed, query)), returned sorted.
inline std::vector<std::size_t> SelectZPopulation(const AuditDataset& dataset,
                                                  std::size_t query,
                                                  std::optional<std::size_t> subsample,
                                                  std::uint64_t seed) {
  if (query >= dataset.rows()) ThrowValidation("query index out of range");
  if (!dataset.IsBase(query)) {
    ThrowValidation("query " + dataset.signals.sample_ids()[query] + " is not a base sample");
  }
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < dataset.rows(); ++i) {
    if (!dataset.IsMember(i) && !dataset.SameGroup(i, query)) candidates.push_back(i);
  }
  if (candidates.empty()) {
    ThrowPrecondition("no population samples for query " +
                      dataset.signals.sample_ids()[query]);
  }
  if (subsample && *subsample < candidates.size()) {
    if (*subsample == 0) ThrowValidation("z subsample size must be positive");
    Rng rng(DeriveSeed(seed, query));
    rng.PartialShuffle(std::span<std::size_t>(candidates), *subsample);
    candidates.resize(*subsample);
    std::sort(candidates.begin(), candidates.end());
  }
  return candidates;
}

// ---------------------------------------------------------------------------
// File formats.

inline SignalMatrix ParseSignalsCsv(std::string_view text) {
  const auto lines = SplitLines(text);
  if (lines.size() < 3) ThrowValidation("malformed header: signals CSV needs kind, ids and rows");
  SignalKind kind;
  if (lines[0] == "#kind=probability") {
    kind = SignalKind::kProbability;
  } else if (lines[0] == "#kind=logit") {
    kind = SignalKind::kLogit;
  } else {
    ThrowValidation("malformed header at line 1: expected #kind=probability|logit");
  }
  std::vector<std::string> model_ids;
  for (auto id : SplitView(lines[1], ',')) model_ids.emplace_back(id);
  const std::size_t cols = model_ids.size();

  std::vector<std::string> sample_ids;
  std::vector<double> values;
  const std::size_t rows = lines.size() - 2;
  values.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto cells = SplitView(lines[r + 2], ',');
    if (cells.size() != cols + 1) {
      ThrowValidation("dimension mismatch at row " + std::to_string(r) + ": expected " +
                      std::to_string(cols) + " values, got " +
                      std::to_string(cells.size() - 1));
    }
    sample_ids.emplace_back(cells[0]);
    for (std::size_t c = 0; c < cols; ++c) {
      auto v = ParseDouble(cells[c + 1]);
      if (!v) ThrowValidation("malformed number at " + Coord(r, c));
      values.push_back(*v);
    }
  }
  return SignalMatrix::Create(std::move(values), rows, cols, kind, std::move(sample_ids),
                              std::move(model_ids));
}

inline std::string EmitSignalsCsv(const SignalMatrix& m) {
  std::string out = "#kind=";
  out += KindName(m.kind());
  out += '\n';
  for (std::size_t c = 0; c < m.cols(); ++c) {
    if (c) out += ',';
    out += m.model_ids()[c];
  }
  out += '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out += m.sample_ids()[r];
    for (double v : m.row(r)) {
      out += ',';
      out += FormatDouble(v);
    }
    out += '\n';
  }
  return out;
}

namespace internal {

template <typename T>
void AppendLe(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out += static_cast<char>((value >> (8 * i)) & 0xFF);
  }
}

template <typename T>
T ReadLe(std::string_view bytes, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return value;
}

}  // namespace internal

inline constexpr std::size_t kRawHeaderSize = 4 + 4 + 1 + 8 + 8;

inline std::string EmitSignalsRaw(const SignalMatrix& m) {
  std::string out = "MIAS";
  internal::AppendLe<std::uint32_t>(out, 1);
  out += static_cast<char>(m.kind());
  internal::AppendLe<std::uint64_t>(out, m.rows());
  internal::AppendLe<std::uint64_t>(out, m.cols());
  for (double v : m.values()) internal::AppendLe(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

inline SignalMatrix ParseSignalsRaw(std::string_view bytes) {
  if (bytes.size() < kRawHeaderSize || bytes.substr(0, 4) != "MIAS") {
    ThrowValidation("malformed header: missing MIAS magic");
  }
  const auto version = internal::ReadLe<std::uint32_t>(bytes, 4);
  if (version != 1) ThrowValidation("malformed header: unsupported version " + std::to_string(version));
  const auto kind_byte = static_cast<unsigned char>(bytes[8]);
  if (kind_byte > 1) ThrowValidation("malformed header: bad kind byte");
  const auto rows = internal::ReadLe<std::uint64_t>(bytes, 9);
  const auto cols = internal::ReadLe<std::uint64_t>(bytes, 17);
  if (rows == 0 || cols == 0 || cols > (bytes.size() / 8) || rows > (bytes.size() / 8) / cols) {
    ThrowValidation("dimension mismatch: header declares " + std::to_string(rows) + "x" +
                    std::to_string(cols) + " for " + std::to_string(bytes.size()) + " bytes");
  }
  if (bytes.size() != kRawHeaderSize + rows * cols * 8) {
    ThrowValidation("dimension mismatch: expected " +
                    std::to_string(kRawHeaderSize + rows * cols * 8) + " bytes, got " +
                    std::to_string(bytes.size()));
  }
  std::vector<double> values(rows * cols);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::bit_cast<double>(
        internal::ReadLe<std::uint64_t>(bytes, kRawHeaderSize + 8 * i));
  }
  return SignalMatrix::Create(std::move(values), rows, cols, static_cast<SignalKind>(kind_byte));
}

inline SignalMatrix LoadSignals(const std::filesystem::path& path, SignalFormat format) {
  const std::string bytes = ReadFile(path);
  try {
    return format == SignalFormat::kCsv ? ParseSignalsCsv(bytes) : ParseSignalsRaw(bytes);
  } catch (const AuditError& e) {
    throw AuditError(e.kind(), path.string() + ": " + e.what());
  }
}

inline std::string EmitSignals(const SignalMatrix& m, SignalFormat format) {
  return format == SignalFormat::kCsv ? EmitSignalsCsv(m) : EmitSignalsRaw(m);
}

inline SignalFormat FormatFromPath(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".raw" || ext == ".bin" || ext == ".mias") ? SignalFormat::kRaw
                                                            : SignalFormat::kCsv;
}

// Ids are checked against the paired signals when they are not the default
// synthesized ids of a raw file.
inline MembershipMatrix ParseMembershipCsv(std::string_view text, const SignalMatrix& signals) {
  const auto lines = SplitLines(text);
  if (lines.empty()) ThrowValidation("malformed header: empty membership file");
  const auto model_ids = SplitView(lines[0], ',');
  const std::size_t rows = lines.size() - 1;
  const std::size_t cols = model_ids.size();
  if (rows != signals.rows() || cols != signals.cols()) {
    ThrowValidation("membership shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                    " does not match signals " + std::to_string(signals.rows()) + "x" +
                    std::to_string(signals.cols()));
  }
  for (std::size_t c = 0; c < cols; ++c) {
    if (model_ids[c] != signals.model_ids()[c]) {
      ThrowValidation("membership model id '" + std::string(model_ids[c]) +
                      "' does not match signals model id '" + signals.model_ids()[c] + "'");
    }
  }
  std::vector<std::uint8_t> bits;
  bits.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto cells = SplitView(lines[r + 1], ',');
    if (cells.size() != cols + 1) {
      ThrowValidation("membership dimension mismatch at row " + std::to_string(r));
    }
    if (cells[0] != signals.sample_ids()[r]) {
      ThrowValidation("membership sample id '" + std::string(cells[0]) +
                      "' does not match signals sample id '" + signals.sample_ids()[r] + "'");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (cells[c + 1] == "1") {
        bits.push_back(1);
      } else if (cells[c + 1] == "0") {
        bits.push_back(0);
      } else {
        ThrowValidation("membership cell not in {0,1} at " + Coord(r, c));
      }
    }
  }
  MembershipMatrix m = MembershipMatrix::CreateUnchecked(std::move(bits), rows, cols);
  for (std::size_t c = 0; c < cols; ++c) {
    bool has_non_member = false;
    for (std::size_t r = 0; r < rows && !has_non_member; ++r) has_non_member = !m.at(r, c);
    if (!has_non_member) {
      ThrowValidation("model " + std::to_string(c) + " (" + signals.model_ids()[c] +
                      ") has no non-members");
    }
  }
  return m;
}

inline MembershipMatrix LoadMembership(const std::filesystem::path& path,
                                       const SignalMatrix& signals) {
  const std::string text = ReadFile(path);
  try {
    return ParseMembershipCsv(text, signals);
  } catch (const AuditError& e) {
    throw AuditError(e.kind(), path.string() + ": " + e.what());
  }
}

inline std::string EmitMembershipCsv(const MembershipMatrix& m, const SignalMatrix& signals) {
  std::string out;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    if (c) out += ',';
    out += signals.model_ids()[c];
  }
  out += '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out += signals.sample_ids()[r];
    for (std::size_t c = 0; c < m.cols(); ++c) out += m.at(r, c) ? ",1" : ",0";
    out += '\n';
  }
  return out;
}

inline AugmentationMap ParseAugmentationCsv(std::string_view text, const SignalMatrix& signals) {
  auto lines = SplitLines(text);
  std::size_t first = 0;
  if (!lines.empty() && lines[0] == "sample_id,group_id,is_base") first = 1;

  const auto sample_index = internal::IndexIds(signals.sample_ids());
  constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);
  std::vector<std::size_t> group_of(signals.rows(), kUnassigned);
  std::vector<std::size_t> base_of;
  std::vector<std::string> group_ids;
  std::unordered_map<std::string, std::size_t> group_index;

  for (std::size_t l = first; l < lines.size(); ++l) {
    const auto cells = SplitView(lines[l], ',');
    const std::string where = "augmentation line " + std::to_string(l + 1);
    if (cells.size() != 3) ThrowValidation(where + ": expected sample_id,group_id,is_base");
    auto it = sample_index.find(cells[0]);
    if (it == sample_index.end()) {
      ThrowValidation(where + ": unknown sample id " + std::string(cells[0]));
    }
    const std::size_t sample = it->second;
    if (group_of[sample] != kUnassigned) {
      ThrowValidation(where + ": sample " + std::string(cells[0]) + " listed twice");
    }
    auto [git, inserted] = group_index.emplace(std::string(cells[1]), base_of.size());
    if (inserted) {
      base_of.push_back(kUnassigned);
      group_ids.emplace_back(cells[1]);
    }
    group_of[sample] = git->second;
    if (cells[2] == "1") {
      if (base_of[git->second] != kUnassigned) {
        ThrowValidation(where + ": group " + std::string(cells[1]) + " has two base samples");
      }
      base_of[git->second] = sample;
    } else if (cells[2] != "0") {
      ThrowValidation(where + ": is_base must be 0 or 1");
    }
  }
  for (std::size_t i = 0; i < group_of.size(); ++i) {
    if (group_of[i] == kUnassigned) {
      ThrowValidation("sample " + signals.sample_ids()[i] + " has no augmentation group");
    }
  }
  for (std::size_t g = 0; g < base_of.size(); ++g) {
    if (base_of[g] == kUnassigned) ThrowValidation("group " + group_ids[g] + " has no base sample");
  }
  return AugmentationMap::Create(std::move(group_of), std::move(base_of), std::move(group_ids));
}

inline AugmentationMap LoadAugmentations(const std::filesystem::path& path,
                                         const SignalMatrix& signals) {
  const std::string text = ReadFile(path);
  try {
    return ParseAugmentationCsv(text, signals);
  } catch (const AuditError& e) {
    throw AuditError(e.kind(), path.string() + ": " + e.what());
  }
}

inline std::string EmitAugmentationCsv(const AugmentationMap& map, const SignalMatrix& signals) {
  std::string out = "sample_id,group_id,is_base\n";
  for (std::size_t i = 0; i < map.sample_count(); ++i) {
    const std::size_t g = map.group_of(i);
    out += signals.sample_ids()[i] + "," + map.group_id(g) + (map.base_of(g) == i ? ",1\n" : ",0\n");
  }
  return out;
}

}  // namespace mia_audit
