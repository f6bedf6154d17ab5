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

// Corpus ingestion and serialization.
//
// A corpus on disk is a manifest (JSON) listing one headered CSV per
// recording plus a schema file with one feature name per line:
//
//   {
//     "schema_file": "schema.txt",
//     "step_seconds": 0.5,
//     "delimiter": ",",
//     "excluded_features": [],
//     "recordings": [
//       {"path": "p01_comic.csv", "recording_id": "p01_comic",
//        "participant_id": "p01",
//        "labels": {"document_type": "comic", "gender": "female"},
//        "rows": [0, 1200]}
//     ]
//   }
//
// Relative paths resolve against the manifest's directory. "rows" is an
// optional half-open data-row range used to trim a recording.

#ifndef TSDP_DATAIO_HPP_
#define TSDP_DATAIO_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tsdp/core.hpp"
#include "tsdp/noise.hpp"
#include "tsdp/text.hpp"

namespace tsdp {

struct ManifestRecording {
  std::string path;
  std::string recording_id;
  std::string participant_id;
  std::map<std::string, std::string> labels;
  std::optional<std::pair<std::size_t, std::size_t>> rows;
};

struct CorpusManifest {
  std::vector<ManifestRecording> recordings;
  std::string schema_path;
  double step_seconds = 0.5;
  char delimiter = ',';
  std::set<std::string> excluded_features;
  // Directory that relative paths resolve against.
  std::string base_dir = ".";

  std::string resolve(const std::string& path) const {
    std::filesystem::path p(path);
    if (p.is_absolute()) return p.string();
    return (std::filesystem::path(base_dir) / p).string();
  }

  void validate() const {
    std::set<std::string> kinds;
    for (const ManifestRecording& r : recordings) {
      for (const auto& [kind, value] : r.labels) kinds.insert(kind);
    }
    std::set<std::string> ids;
    for (const ManifestRecording& r : recordings) {
      if (r.participant_id.empty()) {
        throw LoadError("manifest: recording '" + r.recording_id +
                        "' has an empty participant id");
      }
      if (r.recording_id.empty()) {
        throw LoadError("manifest: recording for '" + r.path +
                        "' has an empty recording id");
      }
      if (!ids.insert(r.recording_id).second) {
        throw LoadError("manifest: duplicate recording id '" + r.recording_id +
                        "'");
      }
      for (const std::string& kind : kinds) {
        if (!r.labels.contains(kind)) {
          throw LoadError("manifest: recording '" + r.recording_id +
                          "' lacks label '" + kind + "'");
        }
      }
      if (r.rows && r.rows->first >= r.rows->second) {
        throw LoadError("manifest: recording '" + r.recording_id +
                        "' has an empty row range");
      }
    }
    if (!(step_seconds > 0)) throw LoadError("manifest: step_seconds must be positive");
  }
};

inline CorpusManifest parse_manifest(const std::string& text,
                                     const std::string& base_dir,
                                     const std::string& origin = "manifest") {
  CorpusManifest m;
  m.base_dir = base_dir;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    m.schema_path = j.at("schema_file").get<std::string>();
    m.step_seconds = j.value("step_seconds", 0.5);
    const std::string delimiter = j.value("delimiter", std::string(","));
    if (delimiter.size() != 1) throw LoadError(origin + ": delimiter must be one character");
    m.delimiter = delimiter[0];
    for (const auto& f : j.value("excluded_features", nlohmann::json::array())) {
      m.excluded_features.insert(f.get<std::string>());
    }
    for (const auto& r : j.at("recordings")) {
      ManifestRecording rec;
      rec.path = r.at("path").get<std::string>();
      rec.recording_id = r.at("recording_id").get<std::string>();
      rec.participant_id = r.at("participant_id").get<std::string>();
      rec.labels = r.value("labels", std::map<std::string, std::string>{});
      if (r.contains("rows")) {
        const auto rows = r.at("rows").get<std::vector<std::size_t>>();
        if (rows.size() != 2) throw LoadError(origin + ": rows must be [start, end]");
        rec.rows = std::make_pair(rows[0], rows[1]);
      }
      m.recordings.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(origin + ": " + e.what());
  }
  m.validate();
  return m;
}

inline CorpusManifest read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(path + ": cannot open manifest");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string dir = std::filesystem::path(path).parent_path().string();
  return parse_manifest(buffer.str(), dir.empty() ? "." : dir, path);
}

inline std::string manifest_json(const CorpusManifest& m) {
  nlohmann::json j;
  j["schema_file"] = m.schema_path;
  j["step_seconds"] = m.step_seconds;
  j["delimiter"] = std::string(1, m.delimiter);
  j["excluded_features"] = m.excluded_features;
  j["recordings"] = nlohmann::json::array();
  for (const ManifestRecording& r : m.recordings) {
    nlohmann::json rec;
    rec["path"] = r.path;
    rec["recording_id"] = r.recording_id;
    rec["participant_id"] = r.participant_id;
    rec["labels"] = r.labels;
    if (r.rows) rec["rows"] = {r.rows->first, r.rows->second};
    j["recordings"].push_back(std::move(rec));
  }
  return j.dump(2) + "\n";
}

inline std::vector<std::string> read_schema(const std::string& path) {
  std::vector<std::string> schema = read_lines(path);
  if (schema.empty()) throw LoadError(path + ": schema lists no features");
  return schema;
}

// Parses one recording CSV. Errors name the file, 1-based line and column.
inline std::vector<std::vector<double>> read_feature_csv(
    const std::string& path, const std::vector<std::string>& schema,
    char delimiter, std::optional<std::pair<std::size_t, std::size_t>> rows) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(path + ": cannot open recording");
  std::string line;
  if (!std::getline(in, line)) throw LoadError(path + ": missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split(line, delimiter);
  if (header != schema) {
    throw SchemaMismatchError(path + ": header does not match the schema (" +
                              std::to_string(header.size()) + " columns vs " +
                              std::to_string(schema.size()) + " features)");
  }
  std::vector<std::vector<double>> columns(schema.size());
  std::size_t line_no = 1;
  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t row = data_row++;
    if (rows && (row < rows->first || row >= rows->second)) continue;
    const std::vector<std::string> fields = split(line, delimiter);
    if (fields.size() != schema.size()) {
      throw LoadError(path + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(schema.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      auto v = parse_double(fields[c]);
      if (!v) {
        throw LoadError(path + ": line " + std::to_string(line_no) +
                        ", column " + std::to_string(c + 1) + " ('" +
                        schema[c] + "'): not a finite number: '" + fields[c] +
                        "'");
      }
      columns[c].push_back(*v);
    }
  }
  if (columns.front().empty()) throw LoadError(path + ": no data rows");
  return columns;
}

// Loads and validates a corpus. Features that are zero everywhere are added
// to the excluded set; a notice per such feature is appended to `notices`.
inline Corpus load_corpus(const CorpusManifest& manifest,
                          std::vector<std::string>* notices = nullptr) {
  manifest.validate();
  const std::vector<std::string> schema =
      read_schema(manifest.resolve(manifest.schema_path));
  std::vector<FeatureMatrix> matrices;
  matrices.reserve(manifest.recordings.size());
  std::vector<bool> nonzero(schema.size(), false);
  for (const ManifestRecording& r : manifest.recordings) {
    std::vector<std::vector<double>> columns = read_feature_csv(
        manifest.resolve(r.path), schema, manifest.delimiter, r.rows);
    std::vector<FeatureColumn> cols;
    cols.reserve(schema.size());
    for (std::size_t f = 0; f < schema.size(); ++f) {
      for (double v : columns[f]) nonzero[f] = nonzero[f] || v != 0.0;
      cols.push_back({schema[f], RealSeq(std::move(columns[f]))});
    }
    matrices.emplace_back(r.recording_id, r.participant_id, r.labels,
                          std::move(cols));
  }
  std::set<std::string> excluded = manifest.excluded_features;
  if (!matrices.empty()) {
    for (std::size_t f = 0; f < schema.size(); ++f) {
      if (!nonzero[f] && excluded.insert(schema[f]).second && notices) {
        notices->push_back("feature '" + schema[f] +
                           "' is zero in every recording; excluded");
      }
    }
  }
  try {
    return Corpus(std::move(matrices), schema, std::move(excluded));
  } catch (const ParameterError& e) {
    throw LoadError(std::string("manifest: ") + e.what());
  }
}

inline std::string feature_csv(const FeatureMatrix& m, char delimiter = ',') {
  std::string out = join(m.feature_names(), delimiter) + "\n";
  for (std::size_t t = 0; t < m.length(); ++t) {
    for (std::size_t f = 0; f < m.feature_count(); ++f) {
      if (f) out += delimiter;
      out += format_double(m.signal(f)[t]);
    }
    out += '\n';
  }
  return out;
}

inline std::string recording_file_name(const std::string& recording_id) {
  std::string name = recording_id;
  for (char& c : name) {
    if (c == '/' || c == '\\' || c == ':') c = '_';
  }
  return name + ".csv";
}

// Writes one CSV per recording, schema.txt and manifest.json. Returns the
// manifest path.
inline std::string write_corpus(const Corpus& corpus, const std::string& out_dir,
                                double step_seconds = 0.5) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw LoadError(out_dir + ": cannot create directory: " + ec.message());
  const std::filesystem::path dir(out_dir);
  CorpusManifest manifest;
  manifest.schema_path = "schema.txt";
  manifest.step_seconds = step_seconds;
  manifest.excluded_features = corpus.excluded_features();
  std::string schema;
  for (const std::string& name : corpus.schema()) schema += name + "\n";
  write_text((dir / "schema.txt").string(), schema);
  for (const FeatureMatrix& m : corpus.matrices()) {
    const std::string file = recording_file_name(m.recording_id());
    write_text((dir / file).string(), feature_csv(m));
    manifest.recordings.push_back(
        {file, m.recording_id(), m.participant_id(), m.labels(), std::nullopt});
  }
  const std::string manifest_path = (dir / "manifest.json").string();
  write_text(manifest_path, manifest_json(manifest));
  return manifest_path;
}

// Synthetic AR(1) corpus with per-label mean offsets:
//   x[0] = offset + N(0, sd)
//   x[t] = offset + rho (x[t-1] - offset) + N(0, sd sqrt(1 - rho^2))
struct SynthSpec {
  std::size_t participants = 20;
  std::size_t recordings_per_label = 1;
  std::string label_kind = "document_type";
  std::vector<std::string> labels = {"comic", "newspaper", "textbook"};
  std::size_t length = 1024;
  std::size_t features = 52;
  // Extra all-zero features appended after the AR(1) ones.
  std::size_t zero_features = 0;
  double ar_coefficient = 0.95;
  // One offset per label; empty means 10, 12, 14, ...
  std::vector<double> label_offsets;
  double noise_sd = 1.0;
  std::uint64_t seed = 0;

  double offset(std::size_t label) const {
    return label_offsets.empty() ? 10.0 + 2.0 * static_cast<double>(label)
                                 : label_offsets.at(label);
  }

  void validate() const {
    if (participants < 1) throw ParameterError("synth: participants must be >= 1");
    if (recordings_per_label < 1) {
      throw ParameterError("synth: recordings per label must be >= 1");
    }
    if (labels.empty()) throw ParameterError("synth: at least one label required");
    if (std::set<std::string>(labels.begin(), labels.end()).size() != labels.size()) {
      throw ParameterError("synth: duplicate labels");
    }
    if (length < 1) throw ParameterError("synth: length must be >= 1");
    if (features + zero_features < 1) throw ParameterError("synth: no features");
    if (!(ar_coefficient >= 0 && ar_coefficient < 1)) {
      throw ParameterError("synth: AR coefficient must lie in [0, 1)");
    }
    if (!label_offsets.empty() && label_offsets.size() != labels.size()) {
      throw ParameterError("synth: need one offset per label");
    }
    if (!(noise_sd > 0) || !std::isfinite(noise_sd)) {
      throw ParameterError("synth: noise sd must be positive");
    }
  }
};

inline std::string synth_feature_name(std::size_t f) {
  std::string digits = std::to_string(f);
  return "f" + std::string(digits.size() < 2 ? 2 - digits.size() : 0, '0') + digits;
}

inline std::string synth_participant_id(std::size_t p) {
  std::string digits = std::to_string(p + 1);
  return "p" + std::string(digits.size() < 2 ? 2 - digits.size() : 0, '0') + digits;
}

inline Corpus synth_corpus(const SynthSpec& spec) {
  spec.validate();
  std::vector<std::string> schema;
  for (std::size_t f = 0; f < spec.features; ++f) schema.push_back(synth_feature_name(f));
  for (std::size_t z = 0; z < spec.zero_features; ++z) {
    schema.push_back("wordbook_" + std::to_string(z + 1));
  }
  const double rho = spec.ar_coefficient;
  const double innovation_sd = spec.noise_sd * std::sqrt(1.0 - rho * rho);
  std::vector<FeatureMatrix> matrices;
  for (std::size_t p = 0; p < spec.participants; ++p) {
    const std::string participant = synth_participant_id(p);
    for (std::size_t l = 0; l < spec.labels.size(); ++l) {
      for (std::size_t rep = 0; rep < spec.recordings_per_label; ++rep) {
        std::vector<FeatureColumn> columns;
        const double offset = spec.offset(l);
        for (std::size_t f = 0; f < spec.features; ++f) {
          NoiseSource src(spec.seed, derive_stream({p, l, rep, f}));
          std::vector<double> x(spec.length);
          x[0] = offset + spec.noise_sd * src.standard_normal();
          for (std::size_t t = 1; t < spec.length; ++t) {
            x[t] = offset + rho * (x[t - 1] - offset) +
                   innovation_sd * src.standard_normal();
          }
          columns.push_back({schema[f], RealSeq(std::move(x))});
        }
        for (std::size_t z = 0; z < spec.zero_features; ++z) {
          columns.push_back({schema[spec.features + z],
                             RealSeq(std::vector<double>(spec.length, 0.0))});
        }
        std::string id = participant + "_" + spec.labels[l];
        if (spec.recordings_per_label > 1) id += "_r" + std::to_string(rep + 1);
        std::map<std::string, std::string> labels{
            {spec.label_kind, spec.labels[l]},
            {"gender", p % 2 == 0 ? "female" : "male"}};
        matrices.emplace_back(id, participant, std::move(labels),
                              std::move(columns));
      }
    }
  }
  std::set<std::string> excluded;
  for (std::size_t z = 0; z < spec.zero_features; ++z) {
    excluded.insert(schema[spec.features + z]);
  }
  return Corpus(std::move(matrices), std::move(schema), std::move(excluded));
}

}  // namespace tsdp

#endif  // TSDP_DATAIO_HPP_
