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

#ifndef TSDP_KTABLE_HPP_
#define TSDP_KTABLE_HPP_

#include <cmath>
#include <compare>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tsdp/core.hpp"
#include "tsdp/text.hpp"

namespace tsdp {

struct KKey {
  std::string group;
  std::string feature;
  std::size_t chunk_index = 0;
  auto operator<=>(const KKey&) const = default;
};

struct KEntry {
  std::size_t k = 1;
  // Grid-minimum mean NMSE observed while tuning; NaN if never defined.
  double mean_nmse = 0;
};

// Retained-coefficient counts for one mechanism and chunk size.
class KTable {
 public:
  KTable() = default;
  KTable(Mechanism mechanism, std::size_t chunk_size, std::size_t runs_used,
         double epsilon_used)
      : mechanism_(mechanism),
        chunk_size_(chunk_size),
        runs_used_(runs_used),
        epsilon_used_(epsilon_used) {}

  Mechanism mechanism() const { return mechanism_; }
  // 0 for whole-signal mechanisms.
  std::size_t chunk_size() const { return chunk_size_; }
  std::size_t runs_used() const { return runs_used_; }
  double epsilon_used() const { return epsilon_used_; }
  const std::map<KKey, KEntry>& entries() const { return entries_; }

  void set(const KKey& key, KEntry entry) {
    if (entry.k < 1) throw ParameterError("k must be at least 1");
    entries_[key] = entry;
  }

  void merge(const KTable& other) {
    for (const auto& [key, entry] : other.entries_) entries_[key] = entry;
  }

  std::optional<std::size_t> find(const KKey& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second.k;
  }

  std::size_t at(const KKey& key) const {
    auto k = find(key);
    if (!k) {
      throw ConfigurationError("no k for group '" + key.group + "', feature '" +
                               key.feature + "', chunk " +
                               std::to_string(key.chunk_index));
    }
    return *k;
  }

 private:
  Mechanism mechanism_ = Mechanism::kFpa;
  std::size_t chunk_size_ = 0;
  std::size_t runs_used_ = 0;
  double epsilon_used_ = 0;
  std::map<KKey, KEntry> entries_;
};

inline const char* kKTableCsvHeader =
    "mechanism,chunk_size,group,feature,chunk,k,runs,epsilon,mean_nmse";

inline std::string ktable_csv(const std::vector<KTable>& tables) {
  std::ostringstream out;
  out << kKTableCsvHeader << '\n';
  for (const KTable& t : tables) {
    for (const auto& [key, entry] : t.entries()) {
      out << to_string(t.mechanism()) << ',' << t.chunk_size() << ','
          << key.group << ',' << key.feature << ',' << key.chunk_index << ','
          << entry.k << ',' << t.runs_used() << ','
          << format_double(t.epsilon_used()) << ','
          << format_double(entry.mean_nmse) << '\n';
    }
  }
  return out.str();
}

// One table per (mechanism, chunk_size) present in the file.
inline std::vector<KTable> read_ktable_csv(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty() || lines.front() != kKTableCsvHeader) {
    throw LoadError(path + ": expected header '" +
                    std::string(kKTableCsvHeader) + "'");
  }
  std::map<std::pair<Mechanism, std::size_t>, KTable> tables;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::vector<std::string> f = split(lines[i], ',');
    const std::string where = path + ": row " + std::to_string(i + 1);
    if (f.size() != 9) throw LoadError(where + ": expected 9 fields");
    Mechanism mechanism;
    try {
      mechanism = parse_mechanism(f[0]);
    } catch (const ParameterError& e) {
      throw LoadError(where + ": " + e.what());
    }
    auto chunk_size = parse_int(f[1]);
    auto chunk = parse_int(f[4]);
    auto k = parse_int(f[5]);
    auto runs = parse_int(f[6]);
    auto epsilon = parse_double(f[7]);
    std::optional<double> nmse = parse_double(f[8]);
    if (f[8] == "nan") nmse = std::nan("");
    if (f[8] == "inf") nmse = std::numeric_limits<double>::infinity();
    if (!chunk_size || *chunk_size < 0 || !chunk || *chunk < 0 || !k ||
        *k < 1 || !runs || *runs < 0 || !epsilon || !nmse) {
      throw LoadError(where + ": malformed numeric field");
    }
    auto [it, inserted] = tables.try_emplace(
        {mechanism, static_cast<std::size_t>(*chunk_size)},
        KTable(mechanism, static_cast<std::size_t>(*chunk_size),
               static_cast<std::size_t>(*runs), *epsilon));
    it->second.set({f[2], f[3], static_cast<std::size_t>(*chunk)},
                   {static_cast<std::size_t>(*k), *nmse});
  }
  std::vector<KTable> out;
  for (auto& [key, table] : tables) out.push_back(std::move(table));
  return out;
}

}  // namespace tsdp

#endif  // TSDP_KTABLE_HPP_
