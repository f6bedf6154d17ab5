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

// tsdp command-line tool.
//
//   tsdp synth --out corpus/
//   tsdp perturb --manifest corpus/manifest.json --mechanism fpa --epsilon 0.48
//       --out private/
//   tsdp sweep --manifest corpus/manifest.json --out sweep.csv
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 internal failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tsdp/classify.hpp"
#include "tsdp/core.hpp"
#include "tsdp/dataio.hpp"
#include "tsdp/ktable.hpp"
#include "tsdp/mechanisms.hpp"
#include "tsdp/metrics.hpp"
#include "tsdp/parallel.hpp"
#include "tsdp/pipeline.hpp"
#include "tsdp/sensitivity.hpp"
#include "tsdp/text.hpp"
#include "tsdp/transform.hpp"
#include "tsdp/tuning.hpp"

namespace {

namespace fs = std::filesystem;

constexpr int kUsageError = 2;
constexpr int kDataError = 3;
constexpr int kInternalError = 4;

struct Global {
  std::uint64_t seed = 0;
  std::size_t jobs = tsdp::default_jobs();
};

tsdp::Corpus load(const std::string& manifest_path) {
  std::vector<std::string> notices;
  tsdp::Corpus corpus = tsdp::load_corpus(tsdp::read_manifest(manifest_path), &notices);
  for (const std::string& n : notices) std::cerr << "note: " << n << '\n';
  if (corpus.empty()) throw tsdp::LoadError(manifest_path + ": no recordings");
  return corpus;
}

// Writes to `path`, or stdout when empty.
void emit(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  tsdp::write_text(path, content);
}

tsdp::Retention parse_retention(const std::string& s) {
  if (s == "leading") return tsdp::Retention::kLeading;
  if (s == "conjugate") return tsdp::Retention::kConjugateSymmetric;
  throw tsdp::ParameterError("unknown retention '" + s + "'");
}

tsdp::Reconstruction parse_reconstruction(const std::string& s) {
  if (s == "running-sum") return tsdp::Reconstruction::kRunningSum;
  if (s == "pairwise") return tsdp::Reconstruction::kPairwise;
  throw tsdp::ParameterError("unknown reconstruction '" + s + "'");
}

tsdp::TuningEvaluator parse_evaluator(const std::string& s) {
  if (s == "fast") return tsdp::TuningEvaluator::kFast;
  if (s == "brute-force") return tsdp::TuningEvaluator::kBruteForce;
  throw tsdp::ParameterError("unknown evaluator '" + s + "'");
}

const std::vector<std::string> kRetentions = {"leading", "conjugate"};
const std::vector<std::string> kReconstructions = {"running-sum", "pairwise"};
const std::vector<std::string> kMechanisms = {"lpa", "fpa", "cfpa", "dcfpa"};

std::vector<std::string> default_label_names(std::size_t count) {
  std::vector<std::string> names = tsdp::SynthSpec{}.labels;
  names.resize(std::min(count, names.size()));
  for (std::size_t i = names.size(); i < count; ++i) {
    names.push_back("label" + std::to_string(i));
  }
  return names;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  std::string out;
  tsdp::SynthSpec spec;
  std::size_t label_count = 3;
  std::vector<std::string> label_names;
  double step_seconds = 0.5;
};

void add_synth(CLI::App& app, SynthArgs& a) {
  CLI::App* cmd = app.add_subcommand("synth", "Generate a synthetic AR(1) corpus");
  cmd->add_option("--out", a.out, "Output directory")->required();
  cmd->add_option("--participants", a.spec.participants, "Participant count")
      ->capture_default_str();
  cmd->add_option("--labels", a.label_count, "Number of labels")->capture_default_str();
  cmd->add_option("--label-names", a.label_names, "Label values (overrides --labels)")
      ->delimiter(',');
  cmd->add_option("--label-kind", a.spec.label_kind, "Label kind")->capture_default_str();
  cmd->add_option("--recordings-per-label", a.spec.recordings_per_label,
                  "Recordings per participant and label")
      ->capture_default_str();
  cmd->add_option("--length", a.spec.length, "Samples per recording")->capture_default_str();
  cmd->add_option("--features", a.spec.features, "Feature count")->capture_default_str();
  cmd->add_option("--zero-features", a.spec.zero_features,
                  "Extra all-zero features (excluded on load)")
      ->capture_default_str();
  cmd->add_option("--rho", a.spec.ar_coefficient, "AR(1) coefficient")->capture_default_str();
  cmd->add_option("--noise-sd", a.spec.noise_sd, "Stationary standard deviation")
      ->capture_default_str();
  cmd->add_option("--offsets", a.spec.label_offsets, "Per-label mean offsets")
      ->delimiter(',');
  cmd->add_option("--step-seconds", a.step_seconds, "Seconds between samples")
      ->capture_default_str();
}

int run_synth(const Global& g, SynthArgs& a) {
  a.spec.seed = g.seed;
  a.spec.labels = a.label_names.empty() ? default_label_names(a.label_count) : a.label_names;
  const tsdp::Corpus corpus = tsdp::synth_corpus(a.spec);
  std::cout << tsdp::write_corpus(corpus, a.out, a.step_seconds) << '\n';
  return 0;
}

// ---- sensitivity ------------------------------------------------------------

struct SensitivityArgs {
  std::string manifest;
  std::string group_by = "document_type";
  std::vector<std::size_t> chunk_sizes = {32, 64, 128};
  std::vector<std::string> domains = {"raw", "difference"};
  std::vector<int> norms = {1, 2};
  std::string out;
};

void add_sensitivity(CLI::App& app, SensitivityArgs& a) {
  CLI::App* cmd = app.add_subcommand("sensitivity", "Compute sensitivity tables");
  cmd->add_option("--manifest", a.manifest, "Corpus manifest")->required();
  cmd->add_option("--group-by", a.group_by, "Label kind defining groups")
      ->capture_default_str();
  cmd->add_option("--chunk-sizes", a.chunk_sizes,
                  "Chunk sizes; the whole-signal entry is always included")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--domains", a.domains, "raw and/or difference")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--norms", a.norms, "1 and/or 2")->delimiter(',')->capture_default_str();
  cmd->add_option("--out", a.out, "Output CSV (default stdout)");
}

int run_sensitivity(const Global& g, const SensitivityArgs& a) {
  const tsdp::Corpus corpus = load(a.manifest);
  const tsdp::Grouping groups = tsdp::group_corpus(corpus, a.group_by);
  std::vector<std::size_t> sizes = {0};
  for (std::size_t c : a.chunk_sizes) {
    if (c == 0) throw tsdp::ParameterError("chunk sizes must be positive");
    sizes.push_back(c);
  }
  std::vector<tsdp::SensitivityRequest> requests;
  for (std::size_t c : sizes) {
    for (const std::string& d : a.domains) {
      for (int w : a.norms) {
        tsdp::check_norm(w);
        tsdp::SensitivityRequest req{c, tsdp::parse_domain(d), w};
        if (std::find(requests.begin(), requests.end(), req) == requests.end()) {
          requests.push_back(req);
        }
      }
    }
  }
  std::vector<tsdp::SensitivityTable> tables =
      tsdp::compute_sensitivity_tables(corpus, groups, requests, g.jobs);
  for (const tsdp::SensitivityTable& t : tables) t.check_invariants();
  emit(a.out, tsdp::sensitivity_csv(tables));
  return 0;
}

// ---- tune-k -------------------------------------------------------------------

struct TuneArgs {
  std::string manifest;
  std::string group_by = "document_type";
  std::string mechanism = "cfpa";
  std::size_t chunk_size = 64;
  double epsilon = 0.48;
  std::size_t runs = 100;
  std::string retention = "leading";
  std::string reconstruction = "running-sum";
  std::string evaluator = "fast";
  std::string out;
};

void add_tune(CLI::App& app, TuneArgs& a) {
  CLI::App* cmd = app.add_subcommand("tune-k", "Tune retained coefficient counts");
  cmd->add_option("--manifest", a.manifest, "Corpus manifest")->required();
  cmd->add_option("--group-by", a.group_by, "Label kind defining groups")
      ->capture_default_str();
  cmd->add_option("--mechanism", a.mechanism, "fpa, cfpa or dcfpa")
      ->check(CLI::IsMember({"fpa", "cfpa", "dcfpa"}))
      ->capture_default_str();
  cmd->add_option("--chunk-size", a.chunk_size, "Chunk size (chunked mechanisms)")
      ->capture_default_str();
  cmd->add_option("--epsilon", a.epsilon, "Budget tuned at")->capture_default_str();
  cmd->add_option("--runs", a.runs, "Noisy evaluations per candidate k")
      ->capture_default_str();
  cmd->add_option("--retention", a.retention, "Coefficient retention")
      ->check(CLI::IsMember(kRetentions))
      ->capture_default_str();
  cmd->add_option("--reconstruction", a.reconstruction, "DCFPA reconstruction")
      ->check(CLI::IsMember(kReconstructions))
      ->capture_default_str();
  cmd->add_option("--evaluator", a.evaluator, "fast or brute-force")
      ->check(CLI::IsMember({"fast", "brute-force"}))
      ->capture_default_str();
  cmd->add_option("--out", a.out, "Output CSV (default stdout)");
}

int run_tune(const Global& g, const TuneArgs& a) {
  const tsdp::Corpus corpus = load(a.manifest);
  const tsdp::Grouping groups = tsdp::group_corpus(corpus, a.group_by);
  tsdp::TuneOptions options;
  options.runs = a.runs;
  options.retention = parse_retention(a.retention);
  options.reconstruction = parse_reconstruction(a.reconstruction);
  options.evaluator = parse_evaluator(a.evaluator);
  const tsdp::KTable table =
      tsdp::tune_corpus(corpus, groups, tsdp::parse_mechanism(a.mechanism),
                        a.chunk_size, a.epsilon, a.runs, g.seed, options, g.jobs);
  emit(a.out, tsdp::ktable_csv({table}));
  return 0;
}

// ---- shared k / sensitivity sources --------------------------------------------

std::optional<tsdp::KTable> matching_table(const std::vector<tsdp::KTable>& tables,
                                           const tsdp::MechanismConfig& config) {
  for (const tsdp::KTable& t : tables) {
    if (t.mechanism() == config.mechanism &&
        t.chunk_size() == config.sensitivity_chunk_size()) {
      return t;
    }
  }
  return std::nullopt;
}

// ---- perturb ---------------------------------------------------------------------

struct PerturbArgs {
  std::string manifest;
  std::string group_by = "document_type";
  std::string mechanism;
  double epsilon = 0;
  std::size_t chunk_size = 64;
  std::optional<std::size_t> k;
  std::string k_file;
  std::string sensitivity_file;
  std::size_t tune_runs = 100;
  bool clamp = false;
  std::string dcfpa_accounting = "per-chunk";
  std::string retention = "leading";
  std::string reconstruction = "running-sum";
  std::string out;
  CLI::Option* chunk_option = nullptr;
};

void add_perturb(CLI::App& app, PerturbArgs& a) {
  CLI::App* cmd = app.add_subcommand("perturb", "Release a privatized corpus");
  cmd->add_option("--manifest", a.manifest, "Corpus manifest")->required();
  cmd->add_option("--group-by", a.group_by, "Label kind defining groups")
      ->capture_default_str();
  cmd->add_option("--mechanism", a.mechanism, "lpa, fpa, cfpa or dcfpa")
      ->required()
      ->check(CLI::IsMember(kMechanisms));
  cmd->add_option("--epsilon", a.epsilon, "Budget per release unit")->required();
  a.chunk_option = cmd->add_option("--chunk-size", a.chunk_size,
                                   "Chunk size (cfpa, dcfpa)")
                       ->capture_default_str();
  cmd->add_option("--k", a.k, "Fixed retained coefficient count");
  cmd->add_option("--k-file", a.k_file, "KTable CSV from tune-k");
  cmd->add_option("--sensitivity-file", a.sensitivity_file,
                  "Sensitivity CSV (computed on the fly when absent)");
  cmd->add_option("--tune-runs", a.tune_runs, "Runs when tuning k on the fly")
      ->capture_default_str();
  cmd->add_flag("--clamp", a.clamp, "Clamp negative outputs to zero");
  cmd->add_option("--dcfpa-accounting", a.dcfpa_accounting,
                  "per-chunk or per-difference")
      ->check(CLI::IsMember({"per-chunk", "per-difference"}))
      ->capture_default_str();
  cmd->add_option("--retention", a.retention, "Coefficient retention")
      ->check(CLI::IsMember(kRetentions))
      ->capture_default_str();
  cmd->add_option("--reconstruction", a.reconstruction, "DCFPA reconstruction")
      ->check(CLI::IsMember(kReconstructions))
      ->capture_default_str();
  cmd->add_option("--out", a.out, "Output directory")->required();
}

int run_perturb(const Global& g, const PerturbArgs& a) {
  const tsdp::CorpusManifest manifest = tsdp::read_manifest(a.manifest);
  const tsdp::Corpus corpus = load(a.manifest);
  const tsdp::Grouping groups = tsdp::group_corpus(corpus, a.group_by);

  tsdp::MechanismConfig config;
  config.mechanism = tsdp::parse_mechanism(a.mechanism);
  config.epsilon = a.epsilon;
  config.retention = parse_retention(a.retention);
  config.reconstruction = parse_reconstruction(a.reconstruction);
  config.difference_accounting = a.dcfpa_accounting == "per-difference"
                                     ? tsdp::DifferenceAccounting::kPerDifference
                                     : tsdp::DifferenceAccounting::kPerChunk;
  if (tsdp::is_chunked(config.mechanism)) {
    config.chunk_size = a.chunk_size;
  } else {
    if (a.chunk_option->count() > 0) {
      std::cerr << "warning: --chunk-size is ignored for " << a.mechanism << '\n';
    }
    config.chunk_size = 0;
  }

  std::vector<tsdp::SensitivityTable> tables =
      a.sensitivity_file.empty()
          ? tsdp::compute_sensitivity_tables(corpus, groups,
                                             {config.sensitivity_request()}, g.jobs)
          : tsdp::read_sensitivity_csv(a.sensitivity_file);

  if (config.mechanism != tsdp::Mechanism::kLpa) {
    if (a.k) {
      config.fixed_k = a.k;
    } else if (!a.k_file.empty()) {
      config.k_table = matching_table(tsdp::read_ktable_csv(a.k_file), config);
      if (!config.k_table) {
        throw tsdp::ConfigurationError(a.k_file + ": no k table for " + a.mechanism +
                                       " with chunk size " +
                                       std::to_string(config.sensitivity_chunk_size()));
      }
    } else {
      tsdp::TuneOptions options;
      options.runs = a.tune_runs;
      options.retention = config.retention;
      options.reconstruction = config.reconstruction;
      config.k_table = tsdp::tune_corpus(corpus, groups, config.mechanism,
                                         config.chunk_size, config.epsilon,
                                         a.tune_runs, g.seed, options, g.jobs);
    }
  } else if (a.k || !a.k_file.empty()) {
    std::cerr << "warning: k is ignored for lpa\n";
  }

  tsdp::ReleaseOptions options;
  options.clamp_nonnegative = a.clamp;
  options.jobs = g.jobs;
  const tsdp::Release release =
      tsdp::release_corpus(corpus, groups, config, tables, g.seed, options);
  for (const tsdp::MechanismReport& r : release.reports) r.check_invariants();

  tsdp::write_corpus(release.corpus, a.out, manifest.step_seconds);
  tsdp::write_text((fs::path(a.out) / "report.json").string(),
                   tsdp::reports_json(config, release.reports));
  for (const tsdp::MechanismReport& r : release.reports) {
    std::cout << r.group_label << ": total_epsilon="
              << tsdp::format_double(r.total_epsilon) << '\n';
  }
  return 0;
}

// ---- sweep ---------------------------------------------------------------------

struct SweepArgs {
  std::string manifest;
  std::string group_by = "document_type";
  std::vector<std::string> mechanisms = kMechanisms;
  tsdp::SweepConfig sweep;
  std::optional<double> tune_epsilon;
  std::optional<std::size_t> k;
  std::string k_file;
  std::string sensitivity_file;
  std::string retention = "leading";
  std::string reconstruction = "running-sum";
  std::string out;
};

void add_sweep(CLI::App& app, SweepArgs& a) {
  CLI::App* cmd = app.add_subcommand("sweep", "Mean utility over an epsilon grid");
  cmd->add_option("--manifest", a.manifest, "Corpus manifest")->required();
  cmd->add_option("--group-by", a.group_by, "Label kind defining groups")
      ->capture_default_str();
  cmd->add_option("--mechanisms", a.mechanisms, "Mechanisms to sweep")
      ->delimiter(',')
      ->check(CLI::IsMember(kMechanisms))
      ->capture_default_str();
  cmd->add_option("--epsilons", a.sweep.epsilons, "Budget grid")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--chunk-sizes", a.sweep.chunk_sizes, "Chunk size grid")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--runs", a.sweep.runs, "Noisy releases per grid point")
      ->capture_default_str();
  cmd->add_option("--tune-runs", a.sweep.tune_runs, "Runs per candidate k when tuning")
      ->capture_default_str();
  cmd->add_option("--tune-epsilon", a.tune_epsilon,
                  "Budget k is tuned at (default: smallest of the grid)");
  cmd->add_flag("--retune-per-epsilon", a.sweep.retune_per_epsilon,
                "Tune k separately at every budget");
  cmd->add_option("--k", a.k, "Fixed retained coefficient count");
  cmd->add_option("--k-file", a.k_file, "KTable CSV from tune-k");
  cmd->add_option("--sensitivity-file", a.sensitivity_file, "Sensitivity CSV");
  cmd->add_option("--retention", a.retention, "Coefficient retention")
      ->check(CLI::IsMember(kRetentions))
      ->capture_default_str();
  cmd->add_option("--reconstruction", a.reconstruction, "DCFPA reconstruction")
      ->check(CLI::IsMember(kReconstructions))
      ->capture_default_str();
  cmd->add_option("--out", a.out, "Output CSV (default stdout)");
}

int run_sweep(const Global& g, SweepArgs& a) {
  const tsdp::Corpus corpus = load(a.manifest);
  const tsdp::Grouping groups = tsdp::group_corpus(corpus, a.group_by);
  tsdp::SweepConfig& s = a.sweep;
  s.mechanisms.clear();
  for (const std::string& m : a.mechanisms) s.mechanisms.push_back(tsdp::parse_mechanism(m));
  s.seed = g.seed;
  s.jobs = g.jobs;
  s.tune_epsilon = a.tune_epsilon;
  s.fixed_k = a.k;
  s.retention = parse_retention(a.retention);
  s.reconstruction = parse_reconstruction(a.reconstruction);
  s.tune_options.runs = s.tune_runs;
  s.tune_options.retention = s.retention;
  s.tune_options.reconstruction = s.reconstruction;
  if (!a.k_file.empty()) s.k_tables = tsdp::read_ktable_csv(a.k_file);
  s.validate();

  std::optional<std::vector<tsdp::SensitivityTable>> supplied;
  if (!a.sensitivity_file.empty()) {
    supplied = tsdp::read_sensitivity_csv(a.sensitivity_file);
  }
  const tsdp::UtilitySweep result =
      tsdp::run_sweep(corpus, groups, s, supplied ? &*supplied : nullptr);
  emit(a.out, tsdp::sweep_csv(result));
  return 0;
}

// ---- corr ----------------------------------------------------------------------

struct CorrArgs {
  std::string manifest;
  std::string group_by = "document_type";
  std::string feature;
  std::size_t reference = 5;
  std::size_t max_lag = 10;
  bool difference = false;
  std::string out;
};

void add_corr(CLI::App& app, CorrArgs& a) {
  CLI::App* cmd = app.add_subcommand("corr", "Correlation against a reference sample");
  cmd->add_option("--manifest", a.manifest, "Corpus manifest")->required();
  cmd->add_option("--group-by", a.group_by, "Label kind defining groups")
      ->capture_default_str();
  cmd->add_option("--feature", a.feature, "Feature name")->required();
  cmd->add_option("--reference", a.reference, "Reference sample index")
      ->capture_default_str();
  cmd->add_option("--max-lag", a.max_lag, "Largest lag")->capture_default_str();
  cmd->add_flag("--difference", a.difference, "Use difference signals");
  cmd->add_option("--out", a.out, "Output directory, one CSV per group")->required();
}

int run_corr(const Global&, const CorrArgs& a) {
  const tsdp::Corpus corpus = load(a.manifest);
  const tsdp::Grouping groups = tsdp::group_corpus(corpus, a.group_by);
  const auto it = std::find(corpus.schema().begin(), corpus.schema().end(), a.feature);
  if (it == corpus.schema().end()) {
    throw tsdp::ParameterError("unknown feature '" + a.feature + "'");
  }
  const std::size_t f = static_cast<std::size_t>(it - corpus.schema().begin());
  fs::create_directories(a.out);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::vector<tsdp::RealSeq> signals;
    for (std::size_t r : groups.members[g]) {
      const tsdp::RealSeq& x = corpus.matrices()[r].signal(f);
      signals.push_back(a.difference ? tsdp::diff_transform(x) : x);
    }
    tsdp::CorrelationCurve curve = tsdp::corr_curve(signals, a.reference, a.max_lag);
    curve.feature = a.feature;
    curve.group_label = groups.labels[g];
    const std::string path =
        (fs::path(a.out) / ("corr_" + groups.labels[g] + ".csv")).string();
    tsdp::write_text(path, tsdp::corr_csv(curve));
    std::cout << path << '\n';
  }
  return 0;
}

// ---- classify ------------------------------------------------------------------

struct ClassifyArgs {
  std::string manifest;
  std::string label_kind = "document_type";
  tsdp::ClassifierConfig config;
  std::string pooling = "first";
  bool majority = false;
  std::string out;
};

void add_classify(CLI::App& app, ClassifyArgs& a) {
  CLI::App* cmd = app.add_subcommand("classify", "Leave-one-participant-out kNN");
  cmd->add_option("--manifest", a.manifest, "Corpus manifest")->required();
  cmd->add_option("--label-kind", a.label_kind, "Label to predict")->capture_default_str();
  cmd->add_option("--k", a.config.k, "Neighbours")->capture_default_str();
  cmd->add_option("--window", a.config.window, "Decimation window")->capture_default_str();
  cmd->add_option("--pooling", a.pooling, "first or mean")
      ->check(CLI::IsMember({"first", "mean"}))
      ->capture_default_str();
  cmd->add_flag("--majority", a.majority, "Also vote per recording");
  cmd->add_option("--out", a.out, "Per-fold CSV (default: not written)");
}

// mechanism, epsilon, chunk size of a released corpus, from its report.json.
std::vector<std::string> release_info(const std::string& manifest_path) {
  const fs::path report = fs::path(manifest_path).parent_path() / "report.json";
  if (!fs::exists(report)) return {"none", "", ""};
  std::ifstream in(report);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw tsdp::LoadError(report.string() + ": " + e.what());
  }
  const std::string chunk =
      j.contains("chunk_size") ? std::to_string(j["chunk_size"].get<std::size_t>()) : "";
  return {j.value("mechanism", "none"),
          tsdp::format_double(j.value("epsilon_per_unit", 0.0)), chunk};
}

int run_classify(const Global& g, ClassifyArgs& a) {
  const tsdp::Corpus corpus = load(a.manifest);
  a.config.pooling = a.pooling == "mean" ? tsdp::Pooling::kMean : tsdp::Pooling::kFirst;
  const tsdp::NoiseSource src(g.seed, tsdp::derive_stream({tsdp::kClassifyStream}));
  const tsdp::CvResult cv =
      tsdp::lopo_cv(corpus, a.label_kind, a.config, a.majority, src, g.jobs);
  if (!a.out.empty()) emit(a.out, tsdp::folds_csv(cv));
  const std::vector<std::string> info = release_info(a.manifest);
  const std::string prefix = a.label_kind + "," + tsdp::join(info, ',') + ",";
  std::cout << "label_kind,mechanism,epsilon,chunk_size,mode,accuracy\n";
  std::cout << prefix << "instance," << tsdp::format_double(cv.instance_accuracy) << '\n';
  if (cv.voted_accuracy) {
    std::cout << prefix << "voted," << tsdp::format_double(*cv.voted_accuracy) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private release of correlated time series"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with flag values; flags win");
  Global global;
  app.add_option("--seed", global.seed, "Seed for every random stream")
      ->capture_default_str();
  app.add_option("--jobs", global.jobs, "Worker threads; results do not depend on it")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  SynthArgs synth;
  SensitivityArgs sensitivity;
  TuneArgs tune;
  PerturbArgs perturb;
  SweepArgs sweep;
  CorrArgs corr;
  ClassifyArgs classify;
  add_synth(app, synth);
  add_sensitivity(app, sensitivity);
  add_tune(app, tune);
  add_perturb(app, perturb);
  add_sweep(app, sweep);
  add_corr(app, corr);
  add_classify(app, classify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "synth") return run_synth(global, synth);
    if (name == "sensitivity") return run_sensitivity(global, sensitivity);
    if (name == "tune-k") return run_tune(global, tune);
    if (name == "perturb") return run_perturb(global, perturb);
    if (name == "sweep") return run_sweep(global, sweep);
    if (name == "corr") return run_corr(global, corr);
    if (name == "classify") return run_classify(global, classify);
    throw tsdp::InvariantError("unhandled subcommand " + name);
  } catch (const tsdp::ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const tsdp::ConfigurationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const tsdp::LoadError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const tsdp::InsufficientGroupError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
}
