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

// Utility and correlation metrics.
//
//   NMSE    = (1/n) sum (x_i - y_i)^2 / (mean(x) * mean(y))
//   Utility = 1 / NMSE
//
// The denominator uses both means exactly as written, so a noisy mean of the
// opposite sign gives a negative NMSE. Such values are kept and flagged;
// aggregate means skip them and count them.

#ifndef TSDP_METRICS_HPP_
#define TSDP_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tsdp/core.hpp"
#include "tsdp/text.hpp"

namespace tsdp {

inline constexpr double kUndefinedDenominator = 1e-12;

namespace detail {

inline double mean(std::span<const double> x) {
  double acc = 0;
  for (double v : x) acc += v;
  return acc / static_cast<double>(x.size());
}

// NMSE from a precomputed sum of squared errors and the two means.
inline std::optional<double> nmse_from(double squared_error, std::size_t n,
                                       double mean_x, double mean_y) {
  const double denominator = mean_x * mean_y;
  if (std::abs(denominator) < kUndefinedDenominator) return std::nullopt;
  return squared_error / static_cast<double>(n) / denominator;
}

}  // namespace detail

// nullopt when |mean(x) * mean(xt)| < 1e-12.
inline std::optional<double> nmse(std::span<const double> x,
                                  std::span<const double> xt) {
  if (x.size() != xt.size()) {
    throw ParameterError("nmse: lengths " + std::to_string(x.size()) + " and " +
                         std::to_string(xt.size()) + " differ");
  }
  if (x.empty()) throw ParameterError("nmse of empty sequences");
  double squared_error = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - xt[i];
    squared_error += d * d;
  }
  return detail::nmse_from(squared_error, x.size(), detail::mean(x),
                           detail::mean(xt));
}

inline std::optional<double> nmse(const RealSeq& x, const RealSeq& xt) {
  return nmse(x.values(), xt.values());
}

struct Utility {
  enum class Kind { kValue, kExact, kUndefined };
  Kind kind = Kind::kUndefined;
  double value = 0;

  static Utility from_nmse(std::optional<double> nmse) {
    if (!nmse) return {Kind::kUndefined, 0};
    if (*nmse == 0) return {Kind::kExact, std::numeric_limits<double>::infinity()};
    return {Kind::kValue, 1.0 / *nmse};
  }

  bool defined() const { return kind != Kind::kUndefined; }
  // Negative NMSE yields a negative utility; such rows are flagged.
  bool flagged() const { return kind == Kind::kValue && value < 0; }

  std::string to_string() const {
    switch (kind) {
      case Kind::kExact: return "exact";
      case Kind::kUndefined: return "undefined";
      case Kind::kValue: break;
    }
    return format_double(value);
  }
};

inline Utility utility(const RealSeq& x, const RealSeq& xt) {
  return Utility::from_nmse(nmse(x, xt));
}

// Mean over features of the per-feature mean; nullopt when no feature has a
// usable value. Flagged (negative) and undefined values are skipped.
struct TwoStageMean {
  std::optional<double> value;
  std::size_t flagged = 0;
};

inline TwoStageMean two_stage_mean(
    const std::map<std::string, std::vector<double>>& per_feature) {
  TwoStageMean out;
  double acc = 0;
  std::size_t features = 0;
  for (const auto& [name, values] : per_feature) {
    double sum = 0;
    std::size_t count = 0;
    for (double v : values) {
      if (std::isnan(v)) continue;
      if (v < 0) {
        ++out.flagged;
        continue;
      }
      sum += v;
      ++count;
    }
    if (count == 0) continue;
    acc += sum / static_cast<double>(count);
    ++features;
  }
  if (features > 0) out.value = acc / static_cast<double>(features);
  return out;
}

// Per-feature mean utility across recordings, then the unweighted mean across
// included features.
inline std::optional<double> mean_utility(const Corpus& corpus,
                                          const Corpus& noisy,
                                          const std::set<std::string>& excluded) {
  if (corpus.size() != noisy.size() || corpus.schema() != noisy.schema()) {
    throw ParameterError("mean_utility: corpora have different shapes");
  }
  std::map<std::string, std::vector<double>> per_feature;
  for (std::size_t r = 0; r < corpus.size(); ++r) {
    const FeatureMatrix& a = corpus.matrices()[r];
    const FeatureMatrix& b = noisy.matrices()[r];
    if (a.length() != b.length()) {
      throw ParameterError("mean_utility: recording '" + a.recording_id() +
                           "' lengths differ");
    }
    for (std::size_t f = 0; f < corpus.schema().size(); ++f) {
      const std::string& name = corpus.schema()[f];
      if (excluded.contains(name)) continue;
      const Utility u = utility(a.signal(f), b.signal(f));
      per_feature[name].push_back(u.defined() ? u.value : std::nan(""));
    }
  }
  return two_stage_mean(per_feature).value;
}

struct SweepRow {
  Mechanism mechanism = Mechanism::kLpa;
  std::optional<std::size_t> chunk_size;
  double epsilon = 0;
  double mean_utility = 0;
  double mean_nmse = 0;
  std::size_t runs = 0;
  std::size_t flagged_rows = 0;
};

struct UtilitySweep {
  std::vector<SweepRow> rows;
};

inline const char* kSweepCsvHeader =
    "mechanism,chunk_size,epsilon,mean_utility,mean_nmse,runs,flagged_rows";

inline std::string sweep_csv(const UtilitySweep& sweep) {
  std::ostringstream out;
  out << kSweepCsvHeader << '\n';
  for (const SweepRow& row : sweep.rows) {
    out << to_string(row.mechanism) << ','
        << (row.chunk_size ? std::to_string(*row.chunk_size) : std::string())
        << ',' << format_double(row.epsilon) << ','
        << format_double(row.mean_utility) << ','
        << format_double(row.mean_nmse) << ',' << row.runs << ','
        << row.flagged_rows << '\n';
  }
  return out.str();
}

struct CorrelationPoint {
  std::size_t delta_t = 0;
  // nullopt when either sample column has zero variance.
  std::optional<double> r;
};

struct CorrelationCurve {
  std::string feature;
  std::string group_label;
  std::size_t reference_index = 5;
  std::vector<CorrelationPoint> points;
};

inline std::optional<double> pearson(std::span<const double> a,
                                     std::span<const double> b) {
  const double ma = detail::mean(a);
  const double mb = detail::mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0 || sbb == 0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

// Pearson correlation across the group between the sample at
// reference_index and the sample delta_t steps later.
inline CorrelationCurve corr_curve(const std::vector<RealSeq>& group,
                                   std::size_t reference_index,
                                   std::size_t max_lag) {
  if (group.size() < 3) {
    throw ParameterError("corr_curve needs at least 3 signals, got " +
                         std::to_string(group.size()));
  }
  for (const RealSeq& s : group) {
    if (s.size() <= reference_index + max_lag) {
      throw ParameterError("corr_curve: a signal of length " +
                           std::to_string(s.size()) +
                           " is too short for reference " +
                           std::to_string(reference_index) + " and lag " +
                           std::to_string(max_lag));
    }
  }
  CorrelationCurve curve;
  curve.reference_index = reference_index;
  std::vector<double> ref(group.size()), lagged(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) ref[i] = group[i][reference_index];
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    for (std::size_t i = 0; i < group.size(); ++i) {
      lagged[i] = group[i][reference_index + lag];
    }
    curve.points.push_back({lag, lag == 0 && pearson(ref, ref) ? 1.0
                                                               : pearson(ref, lagged)});
  }
  return curve;
}

inline std::string corr_csv(const CorrelationCurve& curve) {
  std::ostringstream out;
  out << "delta_t,r\n";
  for (const CorrelationPoint& p : curve.points) {
    out << p.delta_t << ',' << (p.r ? format_double(*p.r) : "nan") << '\n';
  }
  return out.str();
}

}  // namespace tsdp

#endif  // TSDP_METRICS_HPP_
