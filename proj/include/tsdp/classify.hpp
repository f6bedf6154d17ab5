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

// Leave-one-person-out kNN classification of decimated feature vectors.
//
// Every decimated time step of a recording is one instance whose vector holds
// the included features. Each fold holds out all recordings of a participant,
// fits z-score parameters on the remaining rows, and predicts every held-out
// instance. With majority voting, a recording's label is the plurality of its
// instance predictions.

#ifndef TSDP_CLASSIFY_HPP_
#define TSDP_CLASSIFY_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tsdp/core.hpp"
#include "tsdp/noise.hpp"
#include "tsdp/parallel.hpp"
#include "tsdp/text.hpp"

namespace tsdp {

enum class Pooling { kFirst, kMean };

// Keeps one row per non-overlapping window of `window` rows: the first row,
// or the window mean with Pooling::kMean. The last window may be short.
inline FeatureMatrix decimate(const FeatureMatrix& m, std::size_t window,
                              Pooling pooling = Pooling::kFirst) {
  if (window < 1) throw ParameterError("decimation window must be >= 1");
  std::vector<RealSeq> signals;
  signals.reserve(m.feature_count());
  for (std::size_t f = 0; f < m.feature_count(); ++f) {
    const RealSeq& x = m.signal(f);
    std::vector<double> out;
    out.reserve((x.size() + window - 1) / window);
    for (std::size_t start = 0; start < x.size(); start += window) {
      if (pooling == Pooling::kFirst) {
        out.push_back(x[start]);
        continue;
      }
      const std::size_t end = std::min(start + window, x.size());
      double acc = 0;
      for (std::size_t t = start; t < end; ++t) acc += x[t];
      out.push_back(acc / static_cast<double>(end - start));
    }
    signals.emplace_back(std::move(out));
  }
  return m.with_signals(std::move(signals));
}

// Per-dimension mean and population standard deviation. A constant dimension
// stores sd = kZeroVariance and transforms to 0.
struct ZScore {
  static constexpr double kZeroVariance = 0.0;
  std::vector<double> means;
  std::vector<double> sds;

  std::vector<double> apply(std::span<const double> row) const {
    if (row.size() != means.size()) {
      throw ParameterError("zscore: row has " + std::to_string(row.size()) +
                           " dimensions, expected " +
                           std::to_string(means.size()));
    }
    std::vector<double> out(row.size());
    for (std::size_t d = 0; d < row.size(); ++d) {
      out[d] = sds[d] == kZeroVariance ? 0.0 : (row[d] - means[d]) / sds[d];
    }
    return out;
  }

  friend bool operator==(const ZScore&, const ZScore&) = default;
};

inline ZScore zscore_fit(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) throw ParameterError("zscore_fit needs at least 2 rows");
  const std::size_t dims = rows.front().size();
  ZScore z;
  z.means.assign(dims, 0.0);
  z.sds.assign(dims, 0.0);
  for (const std::vector<double>& r : rows) {
    if (r.size() != dims) throw ParameterError("zscore_fit: ragged rows");
    for (std::size_t d = 0; d < dims; ++d) z.means[d] += r[d];
  }
  const double n = static_cast<double>(rows.size());
  for (double& m : z.means) m /= n;
  for (const std::vector<double>& r : rows) {
    for (std::size_t d = 0; d < dims; ++d) {
      const double dev = r[d] - z.means[d];
      z.sds[d] += dev * dev;
    }
  }
  for (std::size_t d = 0; d < dims; ++d) {
    bool constant = true;
    for (const std::vector<double>& r : rows) constant = constant && r[d] == rows[0][d];
    z.sds[d] = constant ? ZScore::kZeroVariance : std::sqrt(z.sds[d] / n);
  }
  return z;
}

struct LabeledVector {
  std::vector<double> x;
  std::string label;
};

namespace detail {

// Plurality label of `votes`; ties among the top counts are broken uniformly
// at random. Candidates are ordered by label so the draw is reproducible.
inline std::string plurality(const std::map<std::string, std::size_t>& votes,
                             NoiseSource& src) {
  std::size_t top = 0;
  for (const auto& [label, count] : votes) top = std::max(top, count);
  std::vector<std::string> tied;
  for (const auto& [label, count] : votes) {
    if (count == top) tied.push_back(label);
  }
  if (tied.size() == 1) return tied.front();
  return tied[src.uniform_index(tied.size())];
}

}  // namespace detail

// Euclidean kNN with plurality vote. Equidistant neighbours are ranked by
// their position in `train`.
inline std::string knn_predict(const std::vector<LabeledVector>& train,
                               std::span<const double> query, std::size_t k,
                               NoiseSource& src) {
  if (train.empty()) throw ParameterError("knn: empty training set");
  if (k < 1 || k > train.size()) {
    throw ParameterError("knn: k=" + std::to_string(k) + " outside [1, " +
                         std::to_string(train.size()) + "]");
  }
  std::vector<std::pair<double, std::size_t>> dist(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const std::vector<double>& x = train[i].x;
    if (x.size() != query.size()) throw ParameterError("knn: dimension mismatch");
    double acc = 0;
    for (std::size_t d = 0; d < x.size(); ++d) {
      const double diff = x[d] - query[d];
      acc += diff * diff;
    }
    dist[i] = {acc, i};
  }
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1),
                   dist.end());
  std::map<std::string, std::size_t> votes;
  for (std::size_t i = 0; i < k; ++i) ++votes[train[dist[i].second].label];
  return detail::plurality(votes, src);
}

inline std::string majority_vote(const std::vector<std::string>& predictions,
                                 NoiseSource& src) {
  if (predictions.empty()) throw ParameterError("majority vote over no predictions");
  std::map<std::string, std::size_t> votes;
  for (const std::string& p : predictions) ++votes[p];
  return detail::plurality(votes, src);
}

struct ClassifierConfig {
  std::size_t k = 11;
  std::size_t window = 10;
  Pooling pooling = Pooling::kFirst;
};

struct InstancePrediction {
  std::string recording_id;
  std::string truth;
  std::string predicted;
};

struct RecordingVote {
  std::string recording_id;
  std::string truth;
  std::string voted;
};

struct FoldResult {
  std::string held_out_participant;
  std::vector<InstancePrediction> predictions;
  // Present iff majority voting was requested.
  std::optional<std::vector<RecordingVote>> votes;
  // Normalization fitted on this fold's training rows.
  ZScore normalization;

  double instance_accuracy() const {
    std::size_t hits = 0;
    for (const InstancePrediction& p : predictions) hits += p.truth == p.predicted;
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
  }

  std::optional<double> voted_accuracy() const {
    if (!votes) return std::nullopt;
    std::size_t hits = 0;
    for (const RecordingVote& v : *votes) hits += v.truth == v.voted;
    return static_cast<double>(hits) / static_cast<double>(votes->size());
  }
};

struct CvResult {
  std::string label_kind;
  std::vector<FoldResult> folds;
  // Mean over folds, and pooled over all instances or recordings.
  double instance_accuracy = 0;
  double pooled_instance_accuracy = 0;
  std::optional<double> voted_accuracy;
  std::optional<double> pooled_voted_accuracy;
};

// Decimated instance rows of one recording, restricted to included features.
inline std::vector<std::vector<double>> instance_rows(const Corpus& corpus,
                                                      std::size_t recording,
                                                      const ClassifierConfig& config) {
  const FeatureMatrix d =
      decimate(corpus.matrices()[recording], config.window, config.pooling);
  const std::vector<std::size_t> features = corpus.included_features();
  std::vector<std::vector<double>> rows(d.length(),
                                        std::vector<double>(features.size()));
  for (std::size_t j = 0; j < features.size(); ++j) {
    const RealSeq& s = d.signal(features[j]);
    for (std::size_t t = 0; t < d.length(); ++t) rows[t][j] = s[t];
  }
  return rows;
}

inline CvResult lopo_cv(const Corpus& corpus, const std::string& label_kind,
                        const ClassifierConfig& config, bool majority,
                        const NoiseSource& src, std::size_t jobs = 1) {
  if (corpus.included_features().empty()) {
    throw ParameterError("lopo_cv: every feature is excluded");
  }
  std::vector<std::string> participants;
  std::vector<std::string> labels(corpus.size());
  std::vector<std::vector<std::vector<double>>> rows(corpus.size());
  for (std::size_t r = 0; r < corpus.size(); ++r) {
    const FeatureMatrix& m = corpus.matrices()[r];
    const std::optional<std::string> label = m.label(label_kind);
    if (!label) {
      throw ParameterError("lopo_cv: recording '" + m.recording_id() +
                           "' has no '" + label_kind + "' label");
    }
    labels[r] = *label;
    rows[r] = instance_rows(corpus, r, config);
    if (std::find(participants.begin(), participants.end(),
                  m.participant_id()) == participants.end()) {
      participants.push_back(m.participant_id());
    }
  }
  if (participants.size() < 2) {
    throw ParameterError("lopo_cv needs at least 2 participants");
  }
  std::sort(participants.begin(), participants.end());

  std::vector<FoldResult> folds(participants.size());
  parallel_for(participants.size(), jobs, [&](std::size_t fold) {
    const std::string& held_out = participants[fold];
    std::vector<std::vector<double>> train_rows;
    std::vector<std::string> train_labels;
    for (std::size_t r = 0; r < corpus.size(); ++r) {
      if (corpus.matrices()[r].participant_id() == held_out) continue;
      for (const std::vector<double>& row : rows[r]) {
        train_rows.push_back(row);
        train_labels.push_back(labels[r]);
      }
    }
    FoldResult result;
    result.held_out_participant = held_out;
    result.normalization = zscore_fit(train_rows);
    std::vector<LabeledVector> train(train_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
      train[i] = {result.normalization.apply(train_rows[i]), train_labels[i]};
    }
    NoiseSource fold_src = src.child({fold});
    if (majority) result.votes.emplace();
    for (std::size_t r = 0; r < corpus.size(); ++r) {
      const FeatureMatrix& m = corpus.matrices()[r];
      if (m.participant_id() != held_out) continue;
      std::vector<std::string> predicted;
      for (const std::vector<double>& row : rows[r]) {
        predicted.push_back(knn_predict(
            train, result.normalization.apply(row), config.k, fold_src));
        result.predictions.push_back({m.recording_id(), labels[r], predicted.back()});
      }
      if (majority) {
        result.votes->push_back(
            {m.recording_id(), labels[r], majority_vote(predicted, fold_src)});
      }
    }
    folds[fold] = std::move(result);
  });

  CvResult out;
  out.label_kind = label_kind;
  std::size_t instances = 0, instance_hits = 0, recordings = 0, vote_hits = 0;
  double fold_sum = 0, vote_sum = 0;
  for (const FoldResult& f : folds) {
    fold_sum += f.instance_accuracy();
    for (const InstancePrediction& p : f.predictions) {
      ++instances;
      instance_hits += p.truth == p.predicted;
    }
    if (f.votes) {
      vote_sum += *f.voted_accuracy();
      for (const RecordingVote& v : *f.votes) {
        ++recordings;
        vote_hits += v.truth == v.voted;
      }
    }
  }
  const double fold_count = static_cast<double>(folds.size());
  out.instance_accuracy = fold_sum / fold_count;
  out.pooled_instance_accuracy =
      static_cast<double>(instance_hits) / static_cast<double>(instances);
  if (majority) {
    out.voted_accuracy = vote_sum / fold_count;
    out.pooled_voted_accuracy =
        static_cast<double>(vote_hits) / static_cast<double>(recordings);
  }
  out.folds = std::move(folds);
  return out;
}

inline std::string folds_csv(const CvResult& cv) {
  std::ostringstream out;
  out << "participant,instances,instance_accuracy,recordings,voted_accuracy\n";
  for (const FoldResult& f : cv.folds) {
    out << f.held_out_participant << ',' << f.predictions.size() << ','
        << format_double(f.instance_accuracy()) << ','
        << (f.votes ? std::to_string(f.votes->size()) : std::string()) << ','
        << (f.votes ? format_double(*f.voted_accuracy()) : std::string())
        << '\n';
  }
  return out.str();
}

}  // namespace tsdp

#endif  // TSDP_CLASSIFY_HPP_
