//
// Copyright 2026 The tsdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Domain types shared by every tsdp module. All types validate their
// invariants on construction and are immutable afterwards.

#ifndef TSDP_CORE_HPP_
#define TSDP_CORE_HPP_

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tsdp {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller-supplied parameter is outside its domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// A participant group is too small for the requested statistic.
class InsufficientGroupError : public Error {
 public:
  using Error::Error;
};

// A release or sweep configuration references data that is not available,
// e.g. a missing sensitivity or k entry.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

// Malformed or missing input data. Messages name the file, row and column.
class LoadError : public Error {
 public:
  using Error::Error;
};

class SchemaMismatchError : public LoadError {
 public:
  using LoadError::LoadError;
};

// An internal invariant was violated; indicates a bug rather than bad input.
class InvariantError : public Error {
 public:
  using Error::Error;
};

// Finite, non-empty, fixed-length sequence of samples.
class RealSeq {
 public:
  explicit RealSeq(std::vector<double> samples) : samples_(std::move(samples)) {
    if (samples_.empty()) {
      throw ParameterError("RealSeq must hold at least one sample");
    }
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (!std::isfinite(samples_[i])) {
        throw ParameterError("RealSeq sample " + std::to_string(i) +
                             " is not finite");
      }
    }
  }
  RealSeq(std::initializer_list<double> samples)
      : RealSeq(std::vector<double>(samples)) {}

  std::size_t size() const { return samples_.size(); }
  double operator[](std::size_t i) const { return samples_[i]; }
  std::span<const double> values() const { return samples_; }
  const std::vector<double>& vector() const { return samples_; }
  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }

  friend bool operator==(const RealSeq&, const RealSeq&) = default;

 private:
  std::vector<double> samples_;
};

// Sequence of complex transform coefficients with finite components.
class ComplexSeq {
 public:
  explicit ComplexSeq(std::vector<std::complex<double>> coefficients)
      : coefficients_(std::move(coefficients)) {
    for (std::size_t i = 0; i < coefficients_.size(); ++i) {
      if (!std::isfinite(coefficients_[i].real()) ||
          !std::isfinite(coefficients_[i].imag())) {
        throw ParameterError("ComplexSeq coefficient " + std::to_string(i) +
                             " is not finite");
      }
    }
  }

  std::size_t size() const { return coefficients_.size(); }
  std::complex<double> operator[](std::size_t i) const {
    return coefficients_[i];
  }
  std::span<const std::complex<double>> values() const { return coefficients_; }
  auto begin() const { return coefficients_.begin(); }
  auto end() const { return coefficients_.end(); }

 private:
  std::vector<std::complex<double>> coefficients_;
};

struct FeatureColumn {
  std::string name;
  RealSeq signal;
};

// One recording: a time x feature grid with its participant and labels.
class FeatureMatrix {
 public:
  FeatureMatrix(std::string recording_id, std::string participant_id,
                std::map<std::string, std::string> labels,
                std::vector<FeatureColumn> columns)
      : recording_id_(std::move(recording_id)),
        participant_id_(std::move(participant_id)),
        labels_(std::move(labels)),
        columns_(std::move(columns)) {
    if (columns_.empty()) {
      throw ParameterError("recording '" + recording_id_ +
                           "' has no feature columns");
    }
    std::set<std::string> seen;
    for (const FeatureColumn& column : columns_) {
      if (column.signal.size() != columns_.front().signal.size()) {
        throw ParameterError("recording '" + recording_id_ + "': column '" +
                             column.name + "' has a different length");
      }
      if (!seen.insert(column.name).second) {
        throw ParameterError("recording '" + recording_id_ +
                             "': duplicate feature '" + column.name + "'");
      }
    }
  }

  const std::string& recording_id() const { return recording_id_; }
  const std::string& participant_id() const { return participant_id_; }
  const std::map<std::string, std::string>& labels() const { return labels_; }
  const std::vector<FeatureColumn>& columns() const { return columns_; }

  std::size_t length() const { return columns_.front().signal.size(); }
  std::size_t feature_count() const { return columns_.size(); }

  std::optional<std::string> label(const std::string& kind) const {
    auto it = labels_.find(kind);
    if (it == labels_.end()) return std::nullopt;
    return it->second;
  }

  const RealSeq& signal(std::size_t feature) const {
    return columns_.at(feature).signal;
  }

  std::vector<std::string> feature_names() const {
    std::vector<std::string> names;
    names.reserve(columns_.size());
    for (const FeatureColumn& column : columns_) names.push_back(column.name);
    return names;
  }

  // Same identity and labels, different signals.
  FeatureMatrix with_signals(std::vector<RealSeq> signals) const {
    if (signals.size() != columns_.size()) {
      throw ParameterError("with_signals: column count mismatch");
    }
    std::vector<FeatureColumn> columns;
    columns.reserve(signals.size());
    for (std::size_t f = 0; f < signals.size(); ++f) {
      columns.push_back({columns_[f].name, std::move(signals[f])});
    }
    return FeatureMatrix(recording_id_, participant_id_, labels_,
                         std::move(columns));
  }

  friend bool operator==(const FeatureMatrix& a, const FeatureMatrix& b) {
    if (a.recording_id_ != b.recording_id_ ||
        a.participant_id_ != b.participant_id_ || a.labels_ != b.labels_ ||
        a.columns_.size() != b.columns_.size()) {
      return false;
    }
    for (std::size_t f = 0; f < a.columns_.size(); ++f) {
      if (a.columns_[f].name != b.columns_[f].name ||
          !(a.columns_[f].signal == b.columns_[f].signal)) {
        return false;
      }
    }
    return true;
  }

 private:
  std::string recording_id_;
  std::string participant_id_;
  std::map<std::string, std::string> labels_;
  std::vector<FeatureColumn> columns_;
};

// Recordings sharing one feature schema.
class Corpus {
 public:
  Corpus(std::vector<FeatureMatrix> matrices, std::vector<std::string> schema,
         std::set<std::string> excluded_features = {})
      : matrices_(std::move(matrices)),
        schema_(std::move(schema)),
        excluded_(std::move(excluded_features)) {
    std::set<std::string> names(schema_.begin(), schema_.end());
    if (names.size() != schema_.size()) {
      throw ParameterError("corpus schema has duplicate feature names");
    }
    for (const std::string& name : excluded_) {
      if (!names.contains(name)) {
        throw ParameterError("excluded feature '" + name +
                             "' is not in the schema");
      }
    }
    for (const FeatureMatrix& m : matrices_) {
      if (m.feature_names() != schema_) {
        throw SchemaMismatchError("recording '" + m.recording_id() +
                                  "' does not match the corpus schema");
      }
    }
  }

  const std::vector<FeatureMatrix>& matrices() const { return matrices_; }
  const std::vector<std::string>& schema() const { return schema_; }
  const std::set<std::string>& excluded_features() const { return excluded_; }
  std::size_t size() const { return matrices_.size(); }
  bool empty() const { return matrices_.empty(); }

  bool is_excluded(std::size_t feature) const {
    return excluded_.contains(schema_.at(feature));
  }

  // Schema indices of the features that are not excluded.
  std::vector<std::size_t> included_features() const {
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < schema_.size(); ++f) {
      if (!is_excluded(f)) out.push_back(f);
    }
    return out;
  }

  std::size_t max_length() const {
    std::size_t n = 0;
    for (const FeatureMatrix& m : matrices_) n = std::max(n, m.length());
    return n;
  }

  Corpus with_matrices(std::vector<FeatureMatrix> matrices) const {
    return Corpus(std::move(matrices), schema_, excluded_);
  }

 private:
  std::vector<FeatureMatrix> matrices_;
  std::vector<std::string> schema_;
  std::set<std::string> excluded_;
};

// Half-open index range [start, end).
struct ChunkRange {
  std::size_t start;
  std::size_t end;
  std::size_t length() const { return end - start; }
  friend bool operator==(const ChunkRange&, const ChunkRange&) = default;
};

// Partition of [0, n) into contiguous chunks of size c; the last chunk may be
// shorter.
class ChunkPlan {
 public:
  ChunkPlan(std::size_t total_length, std::size_t chunk_size)
      : total_length_(total_length), chunk_size_(chunk_size) {
    if (total_length == 0) throw ParameterError("chunk plan over zero samples");
    if (chunk_size == 0) throw ParameterError("chunk size must be positive");
    for (std::size_t start = 0; start < total_length; start += chunk_size) {
      boundaries_.push_back({start, std::min(start + chunk_size, total_length)});
    }
  }

  // Single chunk covering the whole signal.
  static ChunkPlan whole(std::size_t total_length) {
    return ChunkPlan(total_length, total_length);
  }

  std::size_t total_length() const { return total_length_; }
  std::size_t chunk_size() const { return chunk_size_; }
  std::size_t chunk_count() const { return boundaries_.size(); }
  const std::vector<ChunkRange>& boundaries() const { return boundaries_; }
  const ChunkRange& operator[](std::size_t i) const { return boundaries_[i]; }

  // The same chunking restricted to a shorter signal.
  ChunkPlan truncated(std::size_t length) const {
    if (length > total_length_) {
      throw ParameterError("cannot truncate a chunk plan to a longer length");
    }
    return ChunkPlan(length, std::min(chunk_size_, length));
  }

 private:
  std::size_t total_length_;
  std::size_t chunk_size_;
  std::vector<ChunkRange> boundaries_;
};

struct PrivacyParams {
  double epsilon = 1.0;
  int norm_order = 2;
  std::size_t k = 1;
  std::uint64_t seed = 0;

  void validate(std::size_t applicable_length) const {
    if (!(epsilon > 0) || !std::isfinite(epsilon)) {
      throw ParameterError("epsilon must be positive and finite");
    }
    if (norm_order != 1 && norm_order != 2) {
      throw ParameterError("norm order must be 1 or 2");
    }
    if (k < 1 || k > applicable_length) {
      throw ParameterError("k=" + std::to_string(k) + " outside [1, " +
                           std::to_string(applicable_length) + "]");
    }
  }
};

enum class Mechanism { kLpa, kFpa, kCfpa, kDcfpa };

inline std::string to_string(Mechanism m) {
  switch (m) {
    case Mechanism::kLpa: return "lpa";
    case Mechanism::kFpa: return "fpa";
    case Mechanism::kCfpa: return "cfpa";
    case Mechanism::kDcfpa: return "dcfpa";
  }
  throw InvariantError("unknown mechanism");
}

inline Mechanism parse_mechanism(const std::string& name) {
  if (name == "lpa") return Mechanism::kLpa;
  if (name == "fpa") return Mechanism::kFpa;
  if (name == "cfpa") return Mechanism::kCfpa;
  if (name == "dcfpa") return Mechanism::kDcfpa;
  throw ParameterError("unknown mechanism '" + name + "'");
}

inline bool is_chunked(Mechanism m) {
  return m == Mechanism::kCfpa || m == Mechanism::kDcfpa;
}

enum class Accounting { kParallel, kSequential };

inline std::string to_string(Accounting a) {
  return a == Accounting::kParallel ? "parallel" : "sequential";
}

// One (feature, chunk) release unit. lambda and k are absent for identity
// units (zero sensitivity); k is absent for LPA.
struct ReportUnit {
  std::string feature;
  std::size_t chunk_index = 0;
  double sensitivity = 0;
  std::optional<double> lambda;
  std::optional<std::size_t> k;
  double epsilon = 0;
};

// Budget bookkeeping for one release over one participant group.
struct MechanismReport {
  Mechanism mechanism = Mechanism::kLpa;
  std::string group_label;
  std::vector<ReportUnit> per_unit;
  // Rule combining chunk budgets into a feature budget.
  Accounting chunk_accounting = Accounting::kParallel;
  // Rule combining feature budgets into the release budget.
  Accounting accounting = Accounting::kSequential;
  std::map<std::string, double> per_feature_epsilon;
  double total_epsilon = 0;

  void check_invariants() const {
    for (const ReportUnit& u : per_unit) {
      if (!(u.sensitivity >= 0)) {
        throw InvariantError("negative sensitivity in report");
      }
      if (u.lambda && !(*u.lambda > 0)) {
        throw InvariantError("non-positive lambda in report");
      }
    }
    double combined = 0;
    for (const auto& [name, eps] : per_feature_epsilon) {
      combined = accounting == Accounting::kSequential
                     ? combined + eps
                     : std::max(combined, eps);
    }
    if (combined != total_epsilon) {
      throw InvariantError("report total epsilon disagrees with accounting");
    }
  }
};

}  // namespace tsdp

#endif  // TSDP_CORE_HPP_
