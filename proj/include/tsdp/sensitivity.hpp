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

// Query sensitivity of a feature: the largest L_w distance between the
// observation vectors of any two participants in a group. Vectors shorter
// than the group maximum are zero-padded.

#ifndef TSDP_SENSITIVITY_HPP_
#define TSDP_SENSITIVITY_HPP_

#include <algorithm>
#include <cmath>
#include <compare>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "tsdp/core.hpp"
#include "tsdp/text.hpp"

namespace tsdp {

enum class Domain { kRaw, kDifference };

inline std::string to_string(Domain d) {
  return d == Domain::kRaw ? "raw" : "difference";
}

inline Domain parse_domain(const std::string& s) {
  if (s == "raw") return Domain::kRaw;
  if (s == "difference") return Domain::kDifference;
  throw ParameterError("unknown sensitivity domain '" + s + "'");
}

inline void check_norm(int w) {
  if (w != 1 && w != 2) throw ParameterError("norm order must be 1 or 2");
}

// (sum |x_i - y_i|^w)^(1/w).
inline double lw_distance(std::span<const double> x, std::span<const double> y,
                          int w) {
  check_norm(w);
  if (x.size() != y.size()) {
    throw ParameterError("lw_distance: lengths " + std::to_string(x.size()) +
                         " and " + std::to_string(y.size()) + " differ");
  }
  double acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = std::abs(x[i] - y[i]);
    acc += w == 1 ? d : d * d;
  }
  return w == 1 ? acc : std::sqrt(acc);
}

inline double lw_distance(const RealSeq& x, const RealSeq& y, int w) {
  return lw_distance(x.values(), y.values(), w);
}

namespace detail {

inline std::size_t max_length(const std::vector<RealSeq>& group) {
  std::size_t n = 0;
  for (const RealSeq& v : group) n = std::max(n, v.size());
  return n;
}

// Zero-padded vector restricted to [start, end), differenced within the
// range when requested (the range's first element is kept as is).
inline std::vector<double> restrict_range(const RealSeq& v, ChunkRange range,
                                          Domain domain) {
  std::vector<double> out(range.length());
  for (std::size_t t = range.start; t < range.end; ++t) {
    out[t - range.start] = t < v.size() ? v[t] : 0.0;
  }
  if (domain == Domain::kDifference) {
    for (std::size_t i = out.size(); i-- > 1;) out[i] -= out[i - 1];
  }
  return out;
}

inline double max_pair_distance(const std::vector<std::vector<double>>& rows,
                                int w) {
  double best = 0;
  for (std::size_t p = 0; p < rows.size(); ++p) {
    for (std::size_t q = p + 1; q < rows.size(); ++q) {
      best = std::max(best, lw_distance(rows[p], rows[q], w));
    }
  }
  return best;
}

inline void check_group(const std::vector<RealSeq>& group) {
  if (group.size() < 2) {
    throw InsufficientGroupError("sensitivity needs at least 2 vectors, got " +
                                 std::to_string(group.size()));
  }
}

}  // namespace detail

// max over participant pairs of the zero-padded L_w distance.
inline double feature_sensitivity(const std::vector<RealSeq>& group, int w) {
  check_norm(w);
  detail::check_group(group);
  const ChunkRange all{0, detail::max_length(group)};
  std::vector<std::vector<double>> rows;
  rows.reserve(group.size());
  for (const RealSeq& v : group) {
    rows.push_back(detail::restrict_range(v, all, Domain::kRaw));
  }
  return detail::max_pair_distance(rows, w);
}

// Per-chunk sensitivities, optionally in the within-chunk difference domain.
inline std::vector<double> chunk_sensitivities(const std::vector<RealSeq>& group,
                                               const ChunkPlan& plan, int w,
                                               Domain domain) {
  check_norm(w);
  detail::check_group(group);
  if (plan.total_length() != detail::max_length(group)) {
    throw ParameterError("chunk plan covers " +
                         std::to_string(plan.total_length()) +
                         " samples but the longest vector has " +
                         std::to_string(detail::max_length(group)));
  }
  std::vector<double> out;
  out.reserve(plan.chunk_count());
  std::vector<std::vector<double>> rows(group.size());
  for (const ChunkRange& range : plan.boundaries()) {
    for (std::size_t p = 0; p < group.size(); ++p) {
      rows[p] = detail::restrict_range(group[p], range, domain);
    }
    out.push_back(detail::max_pair_distance(rows, w));
  }
  return out;
}

// chunk_size 0 denotes the whole-signal entry.
struct SensitivityKey {
  std::string feature;
  std::size_t chunk_size = 0;
  std::size_t chunk_index = 0;
  Domain domain = Domain::kRaw;
  int norm = 2;
  auto operator<=>(const SensitivityKey&) const = default;
};

class SensitivityTable {
 public:
  explicit SensitivityTable(std::string group_label = {})
      : group_label_(std::move(group_label)) {}

  const std::string& group_label() const { return group_label_; }
  const std::map<SensitivityKey, double>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  void set(const SensitivityKey& key, double value) {
    if (!(value >= 0) || !std::isfinite(value)) {
      throw ParameterError("sensitivity for '" + key.feature +
                           "' must be finite and non-negative");
    }
    check_norm(key.norm);
    entries_[key] = value;
  }

  bool contains(const SensitivityKey& key) const {
    return entries_.contains(key);
  }

  double at(const SensitivityKey& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      throw ConfigurationError(
          "no sensitivity for group '" + group_label_ + "', feature '" +
          key.feature + "', chunk size " + std::to_string(key.chunk_size) +
          ", chunk " + std::to_string(key.chunk_index) + ", " +
          to_string(key.domain) + " domain, L" + std::to_string(key.norm));
    }
    return it->second;
  }

  // Every raw L2 chunk entry is bounded by the feature's whole-signal entry.
  void check_invariants() const {
    for (const auto& [key, value] : entries_) {
      if (key.domain != Domain::kRaw || key.norm != 2 || key.chunk_size == 0) {
        continue;
      }
      SensitivityKey whole{key.feature, 0, 0, Domain::kRaw, 2};
      auto it = entries_.find(whole);
      if (it != entries_.end() && value > it->second) {
        throw InvariantError("chunk sensitivity of '" + key.feature +
                             "' exceeds the whole-signal sensitivity");
      }
    }
  }

 private:
  std::string group_label_;
  std::map<SensitivityKey, double> entries_;
};

// What to compute for a group: whole-signal and/or chunked entries.
struct SensitivityRequest {
  std::size_t chunk_size = 0;  // 0 = whole signal
  Domain domain = Domain::kRaw;
  int norm = 2;
  friend bool operator==(const SensitivityRequest&,
                         const SensitivityRequest&) = default;
};

// Sensitivities of every schema feature over the given recordings. Features
// excluded by the corpus, or all-zero throughout the group, get 0 entries.
inline SensitivityTable compute_sensitivity_table(
    const Corpus& corpus, const std::vector<std::size_t>& members,
    const std::string& group_label,
    const std::vector<SensitivityRequest>& requests) {
  SensitivityTable table(group_label);
  std::vector<RealSeq> group;
  for (std::size_t f = 0; f < corpus.schema().size(); ++f) {
    const std::string& name = corpus.schema()[f];
    group.clear();
    bool all_zero = true;
    for (std::size_t r : members) {
      const RealSeq& s = corpus.matrices().at(r).signal(f);
      all_zero = all_zero && std::all_of(s.begin(), s.end(),
                                         [](double v) { return v == 0.0; });
      group.push_back(s);
    }
    const bool zeroed = corpus.is_excluded(f) || all_zero;
    if (!zeroed) detail::check_group(group);
    const std::size_t n = detail::max_length(group);
    for (const SensitivityRequest& req : requests) {
      const ChunkPlan plan = req.chunk_size == 0
                                 ? ChunkPlan::whole(n)
                                 : ChunkPlan(n, req.chunk_size);
      std::vector<double> values =
          zeroed ? std::vector<double>(plan.chunk_count(), 0.0)
                 : chunk_sensitivities(group, plan, req.norm, req.domain);
      for (std::size_t c = 0; c < values.size(); ++c) {
        table.set({name, req.chunk_size, c, req.domain, req.norm}, values[c]);
      }
    }
  }
  return table;
}

inline const char* kSensitivityCsvHeader =
    "feature,chunk,domain,norm,value,group,chunk_size";

inline std::string sensitivity_csv(const std::vector<SensitivityTable>& tables) {
  std::ostringstream out;
  out << kSensitivityCsvHeader << '\n';
  for (const SensitivityTable& table : tables) {
    for (const auto& [key, value] : table.entries()) {
      out << key.feature << ',' << key.chunk_index << ',' << to_string(key.domain)
          << ',' << key.norm << ',' << format_double(value) << ','
          << table.group_label() << ',' << key.chunk_size << '\n';
    }
  }
  return out.str();
}

// One table per distinct group column value, ordered by group label.
inline std::vector<SensitivityTable> read_sensitivity_csv(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty() || lines.front() != kSensitivityCsvHeader) {
    throw LoadError(path + ": expected header '" +
                    std::string(kSensitivityCsvHeader) + "'");
  }
  std::map<std::string, SensitivityTable> by_group;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::vector<std::string> f = split(lines[i], ',');
    const std::string where = path + ": row " + std::to_string(i + 1);
    if (f.size() != 7) throw LoadError(where + ": expected 7 fields");
    auto chunk = parse_int(f[1]);
    auto norm = parse_int(f[3]);
    auto value = parse_double(f[4]);
    auto chunk_size = parse_int(f[6]);
    if (!chunk || *chunk < 0 || !norm || !value || !chunk_size ||
        *chunk_size < 0) {
      throw LoadError(where + ": malformed numeric field");
    }
    Domain domain;
    try {
      domain = parse_domain(f[2]);
    } catch (const ParameterError& e) {
      throw LoadError(where + ": " + e.what());
    }
    auto [it, inserted] = by_group.try_emplace(f[5], SensitivityTable(f[5]));
    try {
      it->second.set({f[0], static_cast<std::size_t>(*chunk_size),
                      static_cast<std::size_t>(*chunk), domain,
                      static_cast<int>(*norm)},
                     *value);
    } catch (const ParameterError& e) {
      throw LoadError(where + ": " + e.what());
    }
  }
  std::vector<SensitivityTable> out;
  for (auto& [label, table] : by_group) out.push_back(std::move(table));
  return out;
}

}  // namespace tsdp

#endif  // TSDP_SENSITIVITY_HPP_
