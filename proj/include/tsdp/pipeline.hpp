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

// Corpus-level workflows: grouping, k tuning, release and utility sweeps.
//
// Sensitivities and k are computed per participant group, where a group is
// the set of recordings sharing one label value (document type, say). All
// randomness derives from one seed through stream ids built from
// (purpose, run, recording, feature) or (purpose, group, feature), so results
// do not depend on the number of worker threads.

#ifndef TSDP_PIPELINE_HPP_
#define TSDP_PIPELINE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tsdp/core.hpp"
#include "tsdp/ktable.hpp"
#include "tsdp/mechanisms.hpp"
#include "tsdp/metrics.hpp"
#include "tsdp/noise.hpp"
#include "tsdp/parallel.hpp"
#include "tsdp/sensitivity.hpp"
#include "tsdp/tuning.hpp"

namespace tsdp {

// Stream purposes; the first coordinate of every derived stream id.
inline constexpr std::uint64_t kTuneStream = 1;
inline constexpr std::uint64_t kReleaseStream = 2;
inline constexpr std::uint64_t kSweepStream = 3;
inline constexpr std::uint64_t kClassifyStream = 4;

struct Grouping {
  std::vector<std::string> labels;
  // Recording indices per group, aligned with labels.
  std::vector<std::vector<std::size_t>> members;

  std::size_t size() const { return labels.size(); }
};

// Groups recordings by the value of label `kind`. An empty kind, or a kind no
// recording carries, yields the single group "all".
inline Grouping group_corpus(const Corpus& corpus, const std::string& kind) {
  Grouping g;
  std::size_t labeled = 0;
  for (const FeatureMatrix& m : corpus.matrices()) labeled += m.label(kind).has_value();
  if (kind.empty() || labeled == 0) {
    g.labels.push_back("all");
    g.members.emplace_back();
    for (std::size_t r = 0; r < corpus.size(); ++r) g.members[0].push_back(r);
    return g;
  }
  if (labeled != corpus.size()) {
    throw ConfigurationError("only " + std::to_string(labeled) + " of " +
                             std::to_string(corpus.size()) +
                             " recordings carry label '" + kind + "'");
  }
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t r = 0; r < corpus.size(); ++r) {
    by_label[*corpus.matrices()[r].label(kind)].push_back(r);
  }
  for (auto& [label, members] : by_label) {
    g.labels.push_back(label);
    g.members.push_back(std::move(members));
  }
  return g;
}

inline std::size_t group_length(const Corpus& corpus,
                                const std::vector<std::size_t>& members) {
  std::size_t n = 0;
  for (std::size_t r : members) n = std::max(n, corpus.matrices()[r].length());
  return n;
}

inline std::vector<SensitivityTable> compute_sensitivity_tables(
    const Corpus& corpus, const Grouping& groups,
    const std::vector<SensitivityRequest>& requests, std::size_t jobs = 1) {
  std::vector<SensitivityTable> tables(groups.size());
  parallel_for(groups.size(), jobs, [&](std::size_t g) {
    tables[g] = compute_sensitivity_table(corpus, groups.members[g],
                                          groups.labels[g], requests);
  });
  return tables;
}

// Table for `label` from a loaded set; configuration error if absent.
inline const SensitivityTable& table_for(const std::vector<SensitivityTable>& tables,
                                         const std::string& label) {
  for (const SensitivityTable& t : tables) {
    if (t.group_label() == label) return t;
  }
  throw ConfigurationError("no sensitivity table for group '" + label + "'");
}

// Tunes k for every (group, included feature, chunk).
inline KTable tune_corpus(const Corpus& corpus, const Grouping& groups,
                          Mechanism mechanism, std::size_t chunk_size,
                          double epsilon, std::size_t runs, std::uint64_t seed,
                          TuneOptions options = {}, std::size_t jobs = 1) {
  const std::vector<std::size_t> features = corpus.included_features();
  const std::size_t units = groups.size() * features.size();
  std::vector<KTable> parts(units, KTable(mechanism,
                                          is_chunked(mechanism) ? chunk_size : 0,
                                          runs, epsilon));
  parallel_for(units, jobs, [&](std::size_t u) {
    const std::size_t g = u / features.size();
    const std::size_t f = features[u % features.size()];
    std::vector<RealSeq> group;
    for (std::size_t r : groups.members[g]) {
      group.push_back(corpus.matrices()[r].signal(f));
    }
    const std::size_t n = group_length(corpus, groups.members[g]);
    const ChunkPlan plan =
        is_chunked(mechanism) ? ChunkPlan(n, chunk_size) : ChunkPlan::whole(n);
    const NoiseSource src(seed, derive_stream({kTuneStream, g, f}));
    parts[u] = tune_k(group, plan, mechanism, epsilon, runs, src,
                      corpus.schema()[f], groups.labels[g], options);
  });
  KTable table(mechanism, is_chunked(mechanism) ? chunk_size : 0, runs, epsilon);
  for (const KTable& part : parts) table.merge(part);
  return table;
}

struct ReleaseOptions {
  // Post-hoc clamp of negative outputs to zero. Off by default since it
  // biases NMSE.
  bool clamp_nonnegative = false;
  std::size_t jobs = 1;
  // Run index folded into the noise streams.
  std::uint64_t run = 0;
};

struct Release {
  Corpus corpus;
  std::vector<MechanismReport> reports;
};

// Releases every included feature of every recording. Excluded features pass
// through unchanged. `tables` must hold one table per group label.
inline Release release_corpus(const Corpus& corpus, const Grouping& groups,
                              const MechanismConfig& config,
                              const std::vector<SensitivityTable>& tables,
                              std::uint64_t seed,
                              const ReleaseOptions& options = {}) {
  config.validate();
  std::vector<FeatureMatrix> out(corpus.matrices());
  std::vector<MechanismReport> reports(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const SensitivityTable& table = table_for(tables, groups.labels[g]);
    const std::size_t n = group_length(corpus, groups.members[g]);
    const ChunkPlan plan = config.plan(n);
    reports[g] = build_report(config, table, corpus.schema(),
                              corpus.excluded_features(), n);
    const std::vector<std::size_t>& members = groups.members[g];
    parallel_for(members.size(), options.jobs, [&](std::size_t i) {
      const std::size_t r = members[i];
      const FeatureMatrix& m = corpus.matrices()[r];
      std::vector<RealSeq> signals;
      signals.reserve(m.feature_count());
      for (std::size_t f = 0; f < m.feature_count(); ++f) {
        if (corpus.is_excluded(f)) {
          signals.push_back(m.signal(f));
          continue;
        }
        NoiseSource src(seed, derive_stream({kReleaseStream, options.run, r, f}));
        RealSeq noisy =
            release_signal(m.signal(f), config, table, corpus.schema()[f], plan, src);
        if (options.clamp_nonnegative) {
          std::vector<double> v = noisy.vector();
          for (double& x : v) x = std::max(x, 0.0);
          noisy = RealSeq(std::move(v));
        }
        signals.push_back(std::move(noisy));
      }
      out[r] = m.with_signals(std::move(signals));
    });
  }
  return {corpus.with_matrices(std::move(out)), std::move(reports)};
}

inline nlohmann::json report_json(const MechanismReport& report) {
  nlohmann::json j;
  j["mechanism"] = to_string(report.mechanism);
  j["group"] = report.group_label;
  j["chunk_accounting"] = to_string(report.chunk_accounting);
  j["feature_accounting"] = to_string(report.accounting);
  j["per_feature_epsilon"] = report.per_feature_epsilon;
  j["total_epsilon"] = report.total_epsilon;
  j["units"] = nlohmann::json::array();
  for (const ReportUnit& u : report.per_unit) {
    nlohmann::json unit;
    unit["feature"] = u.feature;
    unit["chunk"] = u.chunk_index;
    unit["sensitivity"] = u.sensitivity;
    unit["lambda"] = u.lambda ? nlohmann::json(*u.lambda) : nlohmann::json();
    unit["k"] = u.k ? nlohmann::json(*u.k) : nlohmann::json();
    unit["epsilon"] = u.epsilon;
    j["units"].push_back(std::move(unit));
  }
  return j;
}

// Keys are sorted, so the file is byte-stable for identical inputs.
inline std::string reports_json(const MechanismConfig& config,
                                const std::vector<MechanismReport>& reports) {
  nlohmann::json j;
  j["mechanism"] = to_string(config.mechanism);
  j["epsilon_per_unit"] = config.epsilon;
  if (is_chunked(config.mechanism)) j["chunk_size"] = config.chunk_size;
  j["groups"] = nlohmann::json::array();
  for (const MechanismReport& r : reports) j["groups"].push_back(report_json(r));
  return j.dump(2) + "\n";
}

struct SweepConfig {
  std::vector<Mechanism> mechanisms = {Mechanism::kLpa, Mechanism::kFpa,
                                       Mechanism::kCfpa, Mechanism::kDcfpa};
  std::vector<double> epsilons = {0.48, 2.4, 4.8, 24, 48};
  std::vector<std::size_t> chunk_sizes = {32, 64, 128};
  std::size_t runs = 100;
  std::uint64_t seed = 0;
  // k source: a fixed k, else a supplied table matching (mechanism, chunk
  // size), else tuning on the corpus.
  std::optional<std::size_t> fixed_k;
  std::vector<KTable> k_tables;
  std::size_t tune_runs = 100;
  // Budget k is tuned at; defaults to the smallest budget of the grid.
  std::optional<double> tune_epsilon;
  // Tune separately for every budget of the grid.
  bool retune_per_epsilon = false;
  TuneOptions tune_options;
  Retention retention = Retention::kLeading;
  Reconstruction reconstruction = Reconstruction::kRunningSum;
  std::size_t jobs = 1;

  void validate() const {
    if (mechanisms.empty() || epsilons.empty()) {
      throw ParameterError("sweep grid is empty");
    }
    for (Mechanism m : mechanisms) {
      if (is_chunked(m) && chunk_sizes.empty()) {
        throw ParameterError("sweep grid has chunked mechanisms but no chunk sizes");
      }
    }
    for (double e : epsilons) detail::check_epsilon(e);
    for (std::size_t c : chunk_sizes) {
      if (c == 0) throw ParameterError("chunk sizes must be positive");
    }
    if (runs < 1 || tune_runs < 1) throw ParameterError("runs must be at least 1");
    if (tune_epsilon) detail::check_epsilon(*tune_epsilon);
  }

  // One entry per (mechanism, chunk size) in grid order.
  std::vector<MechanismConfig> configs() const {
    std::vector<MechanismConfig> out;
    for (Mechanism m : mechanisms) {
      MechanismConfig c;
      c.mechanism = m;
      c.retention = retention;
      c.reconstruction = reconstruction;
      if (!is_chunked(m)) {
        c.chunk_size = 0;
        out.push_back(c);
        continue;
      }
      for (std::size_t size : chunk_sizes) {
        c.chunk_size = size;
        out.push_back(c);
      }
    }
    return out;
  }

  std::vector<SensitivityRequest> sensitivity_requests() const {
    std::vector<SensitivityRequest> out;
    for (const MechanismConfig& c : configs()) {
      const SensitivityRequest req = c.sensitivity_request();
      if (std::find(out.begin(), out.end(), req) == out.end()) out.push_back(req);
    }
    return out;
  }
};

namespace detail {

inline std::optional<KTable> supplied_k_table(const SweepConfig& sweep,
                                              const MechanismConfig& config) {
  for (const KTable& t : sweep.k_tables) {
    if (t.mechanism() == config.mechanism &&
        t.chunk_size() == config.sensitivity_chunk_size()) {
      return t;
    }
  }
  return std::nullopt;
}

// Per-run NMSE and utility summed over runs for one (recording, feature)
// and budget.
struct CellSum {
  double nmse = 0;
  double utility = 0;
  std::size_t count = 0;
  std::size_t flagged = 0;
};

}  // namespace detail

// Mean utility and NMSE over `runs` noisy releases for every grid point.
// Every release yields one NMSE and one utility per (recording, feature);
// undefined and negative (flagged) values are skipped. Both are averaged over
// runs, then per feature across recordings, then across included features,
// so the two columns always summarize the same set of releases. Every budget
// of a grid point shares the same draws.
inline UtilitySweep run_sweep(const Corpus& corpus, const Grouping& groups,
                              const SweepConfig& sweep,
                              const std::vector<SensitivityTable>* supplied = nullptr) {
  sweep.validate();
  const std::vector<std::size_t> features = corpus.included_features();
  if (features.empty()) throw ParameterError("sweep: every feature is excluded");
  const std::vector<SensitivityTable> computed =
      supplied ? std::vector<SensitivityTable>{}
               : compute_sensitivity_tables(corpus, groups,
                                            sweep.sensitivity_requests(),
                                            sweep.jobs);
  const std::vector<SensitivityTable>& tables = supplied ? *supplied : computed;
  const double tune_epsilon =
      sweep.tune_epsilon
          ? *sweep.tune_epsilon
          : *std::min_element(sweep.epsilons.begin(), sweep.epsilons.end());

  // group index of every recording
  std::vector<std::size_t> group_of(corpus.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t r : groups.members[g]) group_of[r] = g;
  }

  UtilitySweep out;
  for (MechanismConfig config : sweep.configs()) {
    // Budgets sharing one k setting.
    std::vector<std::vector<std::size_t>> budget_sets;
    if (config.mechanism != Mechanism::kLpa && sweep.retune_per_epsilon &&
        !sweep.fixed_k) {
      for (std::size_t e = 0; e < sweep.epsilons.size(); ++e) budget_sets.push_back({e});
    } else {
      budget_sets.emplace_back();
      for (std::size_t e = 0; e < sweep.epsilons.size(); ++e) budget_sets[0].push_back(e);
    }
    std::vector<SweepRow> rows(sweep.epsilons.size());
    for (const std::vector<std::size_t>& budgets : budget_sets) {
      config.epsilon = sweep.epsilons[budgets.front()];
      config.fixed_k.reset();
      config.k_table.reset();
      if (config.mechanism != Mechanism::kLpa) {
        if (sweep.fixed_k) {
          config.fixed_k = sweep.fixed_k;
        } else if (auto t = detail::supplied_k_table(sweep, config)) {
          config.k_table = std::move(t);
        } else {
          config.k_table = tune_corpus(
              corpus, groups, config.mechanism, config.chunk_size,
              budget_sets.size() > 1 ? config.epsilon : tune_epsilon,
              sweep.tune_runs, sweep.seed, sweep.tune_options, sweep.jobs);
        }
      }
      config.validate();

      // cells[r][j][b]: recording, included feature, budget
      std::vector<std::vector<std::vector<detail::CellSum>>> cells(
          corpus.size(), std::vector<std::vector<detail::CellSum>>(
                             features.size(),
                             std::vector<detail::CellSum>(budgets.size())));
      parallel_for(corpus.size(), sweep.jobs, [&](std::size_t r) {
        const std::size_t g = group_of[r];
        const SensitivityTable& table = table_for(tables, groups.labels[g]);
        const ChunkPlan plan = config.plan(group_length(corpus, groups.members[g]));
        const FeatureMatrix& m = corpus.matrices()[r];
        for (std::size_t j = 0; j < features.size(); ++j) {
          const std::size_t f = features[j];
          const RealSeq& x = m.signal(f);
          const std::string& name = corpus.schema()[f];
          const std::vector<double> base = release_base(x, config, table, name, plan);
          std::vector<double> y(x.size());
          for (std::size_t run = 0; run < sweep.runs; ++run) {
            NoiseSource src(sweep.seed, derive_stream({kSweepStream, run, r, f}));
            const std::vector<double> noise =
                release_noise(x.size(), config, table, name, plan, src);
            for (std::size_t b = 0; b < budgets.size(); ++b) {
              const double eps = sweep.epsilons[budgets[b]];
              for (std::size_t t = 0; t < y.size(); ++t) y[t] = base[t] + noise[t] / eps;
              const std::optional<double> v = nmse(x.values(), y);
              detail::CellSum& cell = cells[r][j][b];
              if (!v) continue;
              if (*v < 0) {
                ++cell.flagged;
                continue;
              }
              cell.nmse += *v;
              cell.utility += Utility::from_nmse(v).value;
              ++cell.count;
            }
          }
        }
      });

      for (std::size_t b = 0; b < budgets.size(); ++b) {
        std::map<std::string, std::vector<double>> nmse_by_feature, utility_by_feature;
        std::size_t flagged = 0;
        for (std::size_t r = 0; r < corpus.size(); ++r) {
          for (std::size_t j = 0; j < features.size(); ++j) {
            const detail::CellSum& cell = cells[r][j][b];
            flagged += cell.flagged;
            if (cell.count == 0) continue;
            const double count = static_cast<double>(cell.count);
            const std::string& name = corpus.schema()[features[j]];
            nmse_by_feature[name].push_back(cell.nmse / count);
            utility_by_feature[name].push_back(cell.utility / count);
          }
        }
        const TwoStageMean u = two_stage_mean(utility_by_feature);
        const TwoStageMean e = two_stage_mean(nmse_by_feature);
        if (!u.value || !e.value) {
          throw ParameterError("sweep: no feature has a defined utility");
        }
        SweepRow& row = rows[budgets[b]];
        row.mechanism = config.mechanism;
        if (is_chunked(config.mechanism)) row.chunk_size = config.chunk_size;
        row.epsilon = sweep.epsilons[budgets[b]];
        row.mean_utility = *u.value;
        row.mean_nmse = *e.value;
        row.runs = sweep.runs;
        row.flagged_rows = flagged;
      }
    }
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  }
  return out;
}

}  // namespace tsdp

#endif  // TSDP_PIPELINE_HPP_
