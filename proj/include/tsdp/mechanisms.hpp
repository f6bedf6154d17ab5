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

// Privatization mechanisms for one signal and the budget accounting that
// turns per-unit epsilons into a release total.
//
//   LPA    x + Lap^n(delta1 / eps)
//   FPA    DFT -> keep bins 0..k-1 -> Laplace(lambda) on real and imaginary
//          parts -> zero-pad -> IDFT (real part),
//          lambda = sqrt(n) sqrt(k) delta2 / eps
//   CFPA   FPA on each chunk with chunk-local n, delta2 and k
//   DCFPA  per chunk: difference -> FPA with difference-domain delta2 ->
//          running sum
//
// Chunks are disjoint, so a chunked release of one feature costs the largest
// chunk epsilon. Features of one recording describe the same people, so their
// epsilons add.

#ifndef TSDP_MECHANISMS_HPP_
#define TSDP_MECHANISMS_HPP_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsdp/core.hpp"
#include "tsdp/ktable.hpp"
#include "tsdp/noise.hpp"
#include "tsdp/sensitivity.hpp"
#include "tsdp/transform.hpp"

namespace tsdp {

namespace detail {

inline void check_epsilon(double epsilon) {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    throw ParameterError("epsilon must be positive and finite");
  }
}

inline void check_sensitivity(double delta) {
  if (!(delta >= 0) || !std::isfinite(delta)) {
    throw ParameterError("sensitivity must be finite and non-negative");
  }
}

}  // namespace detail

inline RealSeq lpa(const RealSeq& x, double delta1, double epsilon,
                   NoiseSource& src) {
  detail::check_epsilon(epsilon);
  detail::check_sensitivity(delta1);
  if (delta1 == 0) return x;
  const double lambda = delta1 / epsilon;
  std::vector<double> out(x.begin(), x.end());
  for (double& v : out) v += sample_laplace(lambda, src);
  return RealSeq(std::move(out));
}

// sqrt(n) sqrt(k) delta2 / eps. Zero sensitivity yields 0, which callers
// treat as the identity mechanism.
inline double fpa_lambda(std::size_t n, std::size_t k, double delta2,
                         double epsilon) {
  detail::check_epsilon(epsilon);
  detail::check_sensitivity(delta2);
  if (k < 1 || k > n) {
    throw ParameterError("fpa: k=" + std::to_string(k) + " outside [1, " +
                         std::to_string(n) + "]");
  }
  return std::sqrt(static_cast<double>(n)) * std::sqrt(static_cast<double>(k)) *
         delta2 / epsilon;
}

// Transform policy used by fpa(): the DFT.
struct FourierTransform {
  static std::vector<Complex> forward(std::span<const double> x) {
    return detail::forward(x);
  }
  static std::vector<double> inverse(std::span<const Complex> leading,
                                     std::size_t n, Retention retention) {
    return detail::inverse_real(detail::pad_spectrum(leading, n, retention));
  }
};

// Transform policy that leaves samples in place. With k = n, fpa() then adds
// Laplace(lambda) to every sample, which isolates the noise path for testing.
struct IdentityTransform {
  static std::vector<Complex> forward(std::span<const double> x) {
    return std::vector<Complex>(x.begin(), x.end());
  }
  static std::vector<double> inverse(std::span<const Complex> leading,
                                     std::size_t n, Retention) {
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < leading.size(); ++i) out[i] = leading[i].real();
    return out;
  }
};

namespace detail {

// Transform, keep k leading coefficients, add lambda-scaled Laplace noise to
// their real and imaginary parts (drawn in that order), invert. lambda = 0
// gives the lossy reconstruction without noise.
template <class Transform = FourierTransform>
std::vector<double> perturb_leading(std::span<const double> x, double lambda,
                                    std::size_t k, NoiseSource& src,
                                    Retention retention) {
  std::vector<Complex> coeffs = Transform::forward(x);
  coeffs.resize(k);
  for (Complex& c : coeffs) {
    const double re = lambda * src.standard_laplace();
    const double im = lambda * src.standard_laplace();
    c += Complex(re, im);
  }
  return Transform::inverse(coeffs, x.size(), retention);
}

}  // namespace detail

template <class Transform = FourierTransform>
RealSeq fpa(const RealSeq& x, double delta2, double epsilon, std::size_t k,
            NoiseSource& src, Retention retention = Retention::kLeading) {
  const double lambda = fpa_lambda(x.size(), k, delta2, epsilon);
  if (lambda == 0) return x;
  return RealSeq(
      detail::perturb_leading<Transform>(x.values(), lambda, k, src, retention));
}

struct ChunkParams {
  double delta2 = 0;
  std::size_t k = 1;
};

// How DCFPA turns noisy differences back into samples.
enum class Reconstruction {
  kRunningSum,
  // x[t] = d[t] + d[t-1]; reproduces the adjacent-pair formula literally.
  kPairwise,
};

namespace detail {

inline void check_chunk_params(const RealSeq& x, const ChunkPlan& plan,
                               std::span<const ChunkParams> per_chunk) {
  if (plan.total_length() != x.size()) {
    throw ParameterError("chunk plan covers " +
                         std::to_string(plan.total_length()) +
                         " samples, signal has " + std::to_string(x.size()));
  }
  if (per_chunk.size() != plan.chunk_count()) {
    throw ParameterError("expected parameters for " +
                         std::to_string(plan.chunk_count()) + " chunks, got " +
                         std::to_string(per_chunk.size()));
  }
  for (std::size_t c = 0; c < per_chunk.size(); ++c) {
    if (per_chunk[c].k < 1 || per_chunk[c].k > plan[c].length()) {
      throw ParameterError("chunk " + std::to_string(c) + ": k=" +
                           std::to_string(per_chunk[c].k) + " outside [1, " +
                           std::to_string(plan[c].length()) + "]");
    }
  }
}

inline RealSeq slice(const RealSeq& x, ChunkRange range) {
  return RealSeq(std::vector<double>(x.begin() + range.start,
                                     x.begin() + range.end));
}

}  // namespace detail

inline RealSeq cfpa(const RealSeq& x, const ChunkPlan& plan,
                    std::span<const ChunkParams> per_chunk, double epsilon,
                    NoiseSource& src, Retention retention = Retention::kLeading) {
  detail::check_epsilon(epsilon);
  detail::check_chunk_params(x, plan, per_chunk);
  std::vector<double> out;
  out.reserve(x.size());
  for (std::size_t c = 0; c < plan.chunk_count(); ++c) {
    const RealSeq chunk = detail::slice(x, plan[c]);
    const RealSeq noisy = fpa(chunk, per_chunk[c].delta2, epsilon,
                              per_chunk[c].k, src, retention);
    out.insert(out.end(), noisy.begin(), noisy.end());
  }
  return RealSeq(std::move(out));
}

inline RealSeq dcfpa(const RealSeq& x, const ChunkPlan& plan,
                     std::span<const ChunkParams> per_chunk, double epsilon,
                     NoiseSource& src,
                     Reconstruction reconstruction = Reconstruction::kRunningSum,
                     Retention retention = Retention::kLeading) {
  detail::check_epsilon(epsilon);
  detail::check_chunk_params(x, plan, per_chunk);
  std::vector<double> out;
  out.reserve(x.size());
  for (std::size_t c = 0; c < plan.chunk_count(); ++c) {
    const RealSeq chunk = detail::slice(x, plan[c]);
    if (per_chunk[c].delta2 == 0) {
      out.insert(out.end(), chunk.begin(), chunk.end());
      continue;
    }
    const RealSeq noisy_diff =
        fpa(diff_transform(chunk), per_chunk[c].delta2, epsilon,
            per_chunk[c].k, src, retention);
    const RealSeq noisy = reconstruction == Reconstruction::kRunningSum
                              ? cumsum_reconstruct(noisy_diff)
                              : pairwise_reconstruct(noisy_diff);
    out.insert(out.end(), noisy.begin(), noisy.end());
  }
  return RealSeq(std::move(out));
}

// Joint budget of mechanisms applied to the same data.
inline double compose_sequential(std::span<const double> epsilons) {
  if (epsilons.empty()) throw ParameterError("no epsilons to compose");
  for (double e : epsilons) detail::check_epsilon(e);
  return std::accumulate(epsilons.begin(), epsilons.end(), 0.0);
}

// Joint budget of mechanisms applied to disjoint data.
inline double compose_parallel(std::span<const double> epsilons) {
  if (epsilons.empty()) throw ParameterError("no epsilons to compose");
  for (double e : epsilons) detail::check_epsilon(e);
  return *std::max_element(epsilons.begin(), epsilons.end());
}

// Budget charged to one DCFPA chunk.
enum class DifferenceAccounting {
  // One FPA invocation per chunk: the chunk costs eps.
  kPerChunk,
  // Conservative: every difference in the chunk is charged eps, so a chunk of
  // length m costs m * eps.
  kPerDifference,
};

struct MechanismConfig {
  Mechanism mechanism = Mechanism::kFpa;
  double epsilon = 1.0;
  // Chunked mechanisms only.
  std::size_t chunk_size = 64;
  // Exactly one k source is used: a fixed k, else the table.
  std::optional<std::size_t> fixed_k;
  std::optional<KTable> k_table;
  DifferenceAccounting difference_accounting = DifferenceAccounting::kPerChunk;
  Retention retention = Retention::kLeading;
  Reconstruction reconstruction = Reconstruction::kRunningSum;

  int norm() const { return mechanism == Mechanism::kLpa ? 1 : 2; }
  Domain domain() const {
    return mechanism == Mechanism::kDcfpa ? Domain::kDifference : Domain::kRaw;
  }
  // Chunk size keying the sensitivity table; 0 for whole-signal mechanisms.
  std::size_t sensitivity_chunk_size() const {
    return is_chunked(mechanism) ? chunk_size : 0;
  }
  SensitivityRequest sensitivity_request() const {
    return {sensitivity_chunk_size(), domain(), norm()};
  }

  ChunkPlan plan(std::size_t n) const {
    return is_chunked(mechanism) ? ChunkPlan(n, chunk_size) : ChunkPlan::whole(n);
  }

  void validate() const {
    detail::check_epsilon(epsilon);
    if (is_chunked(mechanism) && chunk_size == 0) {
      throw ParameterError("chunked mechanisms need a positive chunk size");
    }
    if (mechanism == Mechanism::kLpa) return;
    if (!fixed_k && !k_table) {
      throw ConfigurationError(to_string(mechanism) +
                               " needs a fixed k or a k table");
    }
    if (fixed_k && *fixed_k < 1) throw ParameterError("k must be at least 1");
    if (!fixed_k && k_table &&
        (k_table->mechanism() != mechanism ||
         k_table->chunk_size() != sensitivity_chunk_size())) {
      throw ConfigurationError("k table was tuned for " +
                               to_string(k_table->mechanism()) +
                               " with chunk size " +
                               std::to_string(k_table->chunk_size()));
    }
  }

  // k for one chunk, clamped to the chunk's actual length.
  std::size_t resolve_k(const std::string& group, const std::string& feature,
                        std::size_t chunk_index, std::size_t chunk_length) const {
    const std::size_t k =
        fixed_k ? *fixed_k : k_table->at({group, feature, chunk_index});
    return std::min(k, chunk_length);
  }
};

namespace detail {

inline double lpa_sensitivity(const MechanismConfig& config,
                              const SensitivityTable& table,
                              const std::string& feature) {
  const SensitivityRequest req = config.sensitivity_request();
  return table.at({feature, 0, 0, req.domain, req.norm});
}

inline std::vector<ChunkParams> chunk_params(const MechanismConfig& config,
                                             const SensitivityTable& table,
                                             const std::string& feature,
                                             const ChunkPlan& plan) {
  const SensitivityRequest req = config.sensitivity_request();
  std::vector<ChunkParams> params(plan.chunk_count());
  for (std::size_t c = 0; c < plan.chunk_count(); ++c) {
    params[c].delta2 =
        table.at({feature, req.chunk_size, c, req.domain, req.norm});
    params[c].k = config.resolve_k(table.group_label(), feature, c,
                                   plan[c].length());
  }
  return params;
}

// Inverse transform of k leading coefficients holding only Laplace(lambda)
// draws, consumed in the same order as perturb_leading.
inline std::vector<double> noise_response(std::size_t m, std::size_t k,
                                          double lambda, NoiseSource& src,
                                          Retention retention) {
  std::vector<Complex> coeffs(k);
  for (Complex& c : coeffs) {
    const double re = lambda * src.standard_laplace();
    const double im = lambda * src.standard_laplace();
    c = Complex(re, im);
  }
  return FourierTransform::inverse(coeffs, m, retention);
}

inline std::vector<double> reconstruct(std::vector<double> d,
                                       Reconstruction reconstruction) {
  const RealSeq seq(std::move(d));
  return reconstruction == Reconstruction::kRunningSum
             ? cumsum_reconstruct(seq).vector()
             : pairwise_reconstruct(seq).vector();
}

}  // namespace detail

// Applies the configured mechanism to one signal of a group whose chunk
// sensitivities are given by `table`. `group_plan` spans the longest signal in
// the group; shorter signals use its prefix.
inline RealSeq release_signal(const RealSeq& x, const MechanismConfig& config,
                              const SensitivityTable& table,
                              const std::string& feature,
                              const ChunkPlan& group_plan, NoiseSource& src) {
  const ChunkPlan plan = group_plan.truncated(x.size());
  if (config.mechanism == Mechanism::kLpa) {
    return lpa(x, detail::lpa_sensitivity(config, table, feature),
               config.epsilon, src);
  }
  const std::vector<ChunkParams> params =
      detail::chunk_params(config, table, feature, plan);
  switch (config.mechanism) {
    case Mechanism::kFpa:
      return fpa(x, params[0].delta2, config.epsilon, params[0].k, src,
                 config.retention);
    case Mechanism::kCfpa:
      return cfpa(x, plan, params, config.epsilon, src, config.retention);
    case Mechanism::kDcfpa:
      return dcfpa(x, plan, params, config.epsilon, src, config.reconstruction,
                   config.retention);
    case Mechanism::kLpa:
      break;
  }
  throw InvariantError("unhandled mechanism");
}

// The mechanisms are linear in their Laplace draws and every noise scale is
// proportional to 1/eps, so a release at budget eps equals
//   release_base(x) + release_noise(src) / eps
// up to rounding, for the stream state release_signal would have used.
// Splitting the two lets a sweep reuse one set of draws across budgets.
inline std::vector<double> release_base(const RealSeq& x,
                                        const MechanismConfig& config,
                                        const SensitivityTable& table,
                                        const std::string& feature,
                                        const ChunkPlan& group_plan) {
  const ChunkPlan plan = group_plan.truncated(x.size());
  if (config.mechanism == Mechanism::kLpa) return x.vector();
  const std::vector<ChunkParams> params =
      detail::chunk_params(config, table, feature, plan);
  std::vector<double> out;
  out.reserve(x.size());
  NoiseSource unused(0, 0);
  for (std::size_t c = 0; c < plan.chunk_count(); ++c) {
    const RealSeq chunk = detail::slice(x, plan[c]);
    if (params[c].delta2 == 0) {
      out.insert(out.end(), chunk.begin(), chunk.end());
      continue;
    }
    std::vector<double> part;
    if (config.mechanism == Mechanism::kDcfpa) {
      part = detail::reconstruct(
          detail::perturb_leading(diff_transform(chunk).values(), 0.0,
                                  params[c].k, unused, config.retention),
          config.reconstruction);
    } else {
      part = detail::perturb_leading(chunk.values(), 0.0, params[c].k, unused,
                                     config.retention);
    }
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

inline std::vector<double> release_noise(std::size_t n,
                                         const MechanismConfig& config,
                                         const SensitivityTable& table,
                                         const std::string& feature,
                                         const ChunkPlan& group_plan,
                                         NoiseSource& src) {
  const ChunkPlan plan = group_plan.truncated(n);
  std::vector<double> out;
  out.reserve(n);
  if (config.mechanism == Mechanism::kLpa) {
    const double delta1 = detail::lpa_sensitivity(config, table, feature);
    if (delta1 == 0) return std::vector<double>(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      out.push_back(delta1 * src.standard_laplace());
    }
    return out;
  }
  const std::vector<ChunkParams> params =
      detail::chunk_params(config, table, feature, plan);
  for (std::size_t c = 0; c < plan.chunk_count(); ++c) {
    const std::size_t m = plan[c].length();
    if (params[c].delta2 == 0) {
      out.insert(out.end(), m, 0.0);
      continue;
    }
    const double lambda = fpa_lambda(m, params[c].k, params[c].delta2, 1.0);
    std::vector<double> part =
        detail::noise_response(m, params[c].k, lambda, src, config.retention);
    if (config.mechanism == Mechanism::kDcfpa) {
      part = detail::reconstruct(std::move(part), config.reconstruction);
    }
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

// Per-unit lambda, k and epsilon for releasing every included feature of a
// group whose longest signal has `group_length` samples.
inline MechanismReport build_report(const MechanismConfig& config,
                                    const SensitivityTable& table,
                                    const std::vector<std::string>& features,
                                    const std::set<std::string>& excluded,
                                    std::size_t group_length) {
  config.validate();
  MechanismReport report;
  report.mechanism = config.mechanism;
  report.group_label = table.group_label();
  report.chunk_accounting = Accounting::kParallel;
  report.accounting = Accounting::kSequential;
  const ChunkPlan plan = config.plan(group_length);
  const SensitivityRequest req = config.sensitivity_request();
  for (const std::string& feature : features) {
    if (excluded.contains(feature)) continue;
    std::vector<double> chunk_epsilons;
    for (std::size_t c = 0; c < plan.chunk_count(); ++c) {
      ReportUnit unit;
      unit.feature = feature;
      unit.chunk_index = c;
      unit.sensitivity =
          table.at({feature, req.chunk_size, c, req.domain, req.norm});
      if (unit.sensitivity > 0) {
        const std::size_t m = plan[c].length();
        if (config.mechanism == Mechanism::kLpa) {
          unit.lambda = unit.sensitivity / config.epsilon;
        } else {
          unit.k = config.resolve_k(table.group_label(), feature, c, m);
          unit.lambda = fpa_lambda(m, *unit.k, unit.sensitivity, config.epsilon);
        }
        unit.epsilon =
            config.mechanism == Mechanism::kDcfpa &&
                    config.difference_accounting ==
                        DifferenceAccounting::kPerDifference
                ? config.epsilon * static_cast<double>(m)
                : config.epsilon;
        chunk_epsilons.push_back(unit.epsilon);
      }
      report.per_unit.push_back(std::move(unit));
    }
    report.per_feature_epsilon[feature] =
        chunk_epsilons.empty() ? 0.0 : compose_parallel(chunk_epsilons);
  }
  for (const auto& [feature, eps] : report.per_feature_epsilon) {
    report.total_epsilon += eps;
  }
  report.check_invariants();
  return report;
}

}  // namespace tsdp

#endif  // TSDP_MECHANISMS_HPP_
