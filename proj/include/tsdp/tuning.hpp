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

// Choice of the retained-coefficient count k. For every chunk, each candidate
// k in 1..chunk_length is scored by the mean NMSE of `runs` noisy
// reconstructions over the group, and the smallest k attaining the minimum
// wins.
//
// Within one run every candidate k sees the same noise draws: the mechanism
// with k coefficients consumes the first 2k draws of the run's stream, so the
// curve over k for one run is evaluated from one 2m-draw prefix. Two exact
// fast evaluators produce that curve:
//
//  * raw domain: the error spectrum changes in one conjugate pair per step,
//    so the squared error is assembled from prefix/suffix sums in O(m);
//  * difference domain: the running sum does not diagonalize in frequency,
//    so the time-domain reconstruction is updated one bin at a time, O(m^2).
//
// The brute-force evaluator executes the mechanism for every k and is used
// for conjugate-symmetric retention and to cross-check the fast paths.

#ifndef TSDP_TUNING_HPP_
#define TSDP_TUNING_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "tsdp/core.hpp"
#include "tsdp/ktable.hpp"
#include "tsdp/mechanisms.hpp"
#include "tsdp/metrics.hpp"
#include "tsdp/noise.hpp"
#include "tsdp/parallel.hpp"
#include "tsdp/sensitivity.hpp"
#include "tsdp/transform.hpp"

namespace tsdp {

enum class TuningEvaluator { kFast, kBruteForce };

struct TuneOptions {
  std::size_t runs = 100;
  Retention retention = Retention::kLeading;
  Reconstruction reconstruction = Reconstruction::kRunningSum;
  TuningEvaluator evaluator = TuningEvaluator::kFast;
};

namespace detail {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline double nmse_or_nan(double squared_error, std::size_t m, double mean_x,
                          double mean_y) {
  auto v = nmse_from(squared_error, m, mean_x, mean_y);
  return v ? *v : kNaN;
}

inline double chunk_lambda(std::size_t m, std::size_t k, double delta,
                           double epsilon) {
  return delta == 0 ? 0.0 : fpa_lambda(m, k, delta, epsilon);
}

// m unit Laplace pairs (re, im) in the order perturb_leading draws them.
inline std::vector<Complex> unit_noise(std::size_t m, NoiseSource& src) {
  std::vector<Complex> u(m);
  for (Complex& c : u) {
    const double re = src.standard_laplace();
    const double im = src.standard_laplace();
    c = Complex(re, im);
  }
  return u;
}

// NMSE(k), k = 1..m, of FPA on a raw-domain chunk with leading retention.
// Entry k-1 is NaN where NMSE is undefined.
//
// The error e = x - y is the real part of IDFT(E) with E = tail of the
// spectrum (bins >= k) minus lambda * noise (bins < k). Its energy is
// (1/m) sum_p w_p |alpha_p - lambda beta_p|^2 over conjugate pairs
// p = {p, m-p}, where alpha/beta are the pair-symmetrized tail and noise
// and w_p = 2 (1 for the self-paired DC and Nyquist bins).
class RawCurve {
 public:
  RawCurve(std::span<const double> x, double delta, double epsilon)
      : m_(x.size()),
        pairs_(m_ / 2 + 1),
        mid_(m_ / 2),
        has_nyquist_(m_ % 2 == 0 && mid_ > 0),
        f_(forward(x)),
        mean_x_(mean(x)),
        lambda_(m_ + 1) {
    // Signal energies for the states a pair passes through as k grows:
    // both bins in the tail, or only the upper bin left (split).
    std::vector<double> tail_energy(pairs_, 0.0), split_signal(pairs_, 0.0);
    split_tail_.assign(pairs_, Complex());
    for (std::size_t p = 0; p < pairs_; ++p) {
      if (self_paired(p)) {
        tail_energy[p] = f_[p].real() * f_[p].real();
        continue;
      }
      split_tail_[p] = std::conj(f_[m_ - p]) / 2.0;
      tail_energy[p] = 2.0 * std::norm((f_[p] + std::conj(f_[m_ - p])) / 2.0);
      split_signal[p] = 2.0 * std::norm(split_tail_[p]);
    }
    // Accumulated without subtraction so that small tails stay accurate.
    tail_suffix_.assign(pairs_ + 1, 0.0);
    for (std::size_t p = pairs_; p-- > 0;) {
      tail_suffix_[p] = tail_suffix_[p + 1] + tail_energy[p];
    }
    signal_prefix_.assign(pairs_, 0.0);
    for (std::size_t p = 1; p < pairs_; ++p) {
      signal_prefix_[p] = signal_prefix_[p - 1] + split_signal[p];
    }
    for (std::size_t k = 1; k <= m_; ++k) lambda_[k] = chunk_lambda(m_, k, delta, epsilon);
  }

  // Consumes 2m draws from src.
  std::vector<double> operator()(NoiseSource& src) const {
    const std::vector<Complex> u = unit_noise(m_, src);
    std::vector<double> noise_energy(pairs_, 0.0), split_noise(pairs_, 0.0),
        split_cross(pairs_, 0.0);
    for (std::size_t p = 0; p < pairs_; ++p) {
      if (self_paired(p)) {
        noise_energy[p] = u[p].real() * u[p].real();
        continue;
      }
      const Complex split_u = u[p] / 2.0;
      noise_energy[p] = 2.0 * std::norm((u[p] + std::conj(u[m_ - p])) / 2.0);
      split_noise[p] = 2.0 * std::norm(split_u);
      split_cross[p] = 2.0 * (split_tail_[p] * std::conj(split_u)).real();
    }
    std::vector<double> noise_suffix(pairs_ + 1, 0.0);
    for (std::size_t p = pairs_; p-- > 1;) {
      noise_suffix[p] = noise_suffix[p + 1] + (self_paired(p) ? 0.0 : noise_energy[p]);
    }
    std::vector<double> noise_prefix(pairs_, 0.0), cross_prefix(pairs_, 0.0);
    for (std::size_t p = 1; p < pairs_; ++p) {
      noise_prefix[p] = noise_prefix[p - 1] + split_noise[p];
      cross_prefix[p] = cross_prefix[p - 1] + split_cross[p];
    }

    std::vector<double> curve(m_);
    for (std::size_t k = 1; k <= m_; ++k) {
      // Split pairs: 1 <= p <= min(k-1, m-k); all of them are non-self.
      const std::size_t last_split = std::min({k - 1, m_ - k, pairs_ - 1});
      const double a =
          (k < pairs_ ? tail_suffix_[k] : 0.0) + signal_prefix_[last_split];
      const double b = cross_prefix[last_split];
      // DC is always noised; non-self pairs p > m-k are fully noised.
      double c = noise_energy[0] + noise_prefix[last_split];
      const std::size_t first_noised = std::max<std::size_t>(m_ - k + 1, 1);
      if (first_noised < pairs_) c += noise_suffix[first_noised];
      if (has_nyquist_ && mid_ < k) c += noise_energy[mid_];
      const double lambda = lambda_[k];
      const double squared = std::max(
          0.0, (a - 2.0 * lambda * b + lambda * lambda * c) / static_cast<double>(m_));
      const double mean_y =
          mean_x_ + lambda * u[0].real() / static_cast<double>(m_);
      curve[k - 1] = nmse_or_nan(squared, m_, mean_x_, mean_y);
    }
    return curve;
  }

 private:
  bool self_paired(std::size_t p) const {
    return p == 0 || (has_nyquist_ && p == mid_);
  }

  std::size_t m_, pairs_, mid_;
  bool has_nyquist_;
  std::vector<Complex> f_;
  double mean_x_;
  std::vector<double> lambda_;
  std::vector<Complex> split_tail_;
  std::vector<double> tail_suffix_, signal_prefix_;
};

// Reconstruction (running sum or pairwise) of the real and imaginary parts
// of every inverse-DFT row: coefficient a in bin j contributes
// a.real() * re(j) - a.imag() * im(j) to the reconstructed chunk.
class ReconstructionBasis {
 public:
  ReconstructionBasis(std::size_t m, Reconstruction reconstruction)
      : m_(m), re_(m * m), im_(m * m) {
    const bool running = reconstruction == Reconstruction::kRunningSum;
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t j = 0; j < m; ++j) {
      double acc_re = 0, acc_im = 0, prev_re = 0, prev_im = 0;
      std::size_t idx = 0;
      for (std::size_t t = 0; t < m; ++t) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(idx) *
                             inv_m;
        const double c = std::cos(angle) * inv_m;
        const double sn = std::sin(angle) * inv_m;
        idx += j;
        if (idx >= m) idx -= m;
        if (running) {
          acc_re += c;
          acc_im += sn;
        } else {
          acc_re = c + prev_re;
          acc_im = sn + prev_im;
          prev_re = c;
          prev_im = sn;
        }
        re_[j * m + t] = acc_re;
        im_[j * m + t] = acc_im;
      }
    }
  }

  std::size_t size() const { return m_; }

  void add(std::size_t j, Complex a, std::vector<double>& out) const {
    const double ar = a.real(), ai = a.imag();
    const double* re = &re_[j * m_];
    const double* im = &im_[j * m_];
    for (std::size_t t = 0; t < m_; ++t) out[t] += ar * re[t] - ai * im[t];
  }

 private:
  std::size_t m_;
  std::vector<double> re_, im_;
};

// NMSE(k), k = 1..m, of the DCFPA chunk pipeline (difference, leading
// truncation with noise, reconstruction), evaluated in the time domain.
// Both reconstructions are linear, so after adding bins 0..k-1 the output is
// S_k + lambda N_k with S_k from the signal alone and N_k from unit noise.
// The residuals x - S_k are tabulated once; each run then only accumulates
// N_k one bin at a time.
class DifferenceCurve {
 public:
  DifferenceCurve(std::span<const double> x, double delta, double epsilon,
                  std::shared_ptr<const ReconstructionBasis> basis)
      : m_(x.size()),
        mean_x_(mean(x)),
        basis_(std::move(basis)),
        lambda_(m_),
        residual_(m_ * m_),
        residual_energy_(m_),
        signal_mean_(m_) {
    if (basis_->size() != m_) throw InvariantError("basis length mismatch");
    std::vector<double> d(x.begin(), x.end());
    for (std::size_t t = m_; t-- > 1;) d[t] -= d[t - 1];
    const std::vector<Complex> spectrum = forward(d);
    std::vector<double> signal(m_, 0.0);
    for (std::size_t j = 0; j < m_; ++j) {
      lambda_[j] = chunk_lambda(m_, j + 1, delta, epsilon);
      basis_->add(j, spectrum[j], signal);
      double* r = &residual_[j * m_];
      double energy = 0, sum = 0;
      for (std::size_t t = 0; t < m_; ++t) {
        r[t] = x[t] - signal[t];
        energy += r[t] * r[t];
        sum += signal[t];
      }
      residual_energy_[j] = energy;
      signal_mean_[j] = sum / static_cast<double>(m_);
    }
  }

  // Consumes 2m draws from src.
  std::vector<double> operator()(NoiseSource& src) const {
    const std::vector<Complex> u = unit_noise(m_, src);
    const double inv_m = 1.0 / static_cast<double>(m_);
    std::vector<double> noise(m_, 0.0);
    std::vector<double> curve(m_);
    for (std::size_t j = 0; j < m_; ++j) {
      basis_->add(j, u[j], noise);
      const double* r = &residual_[j * m_];
      // Four interleaved partial sums per reduction.
      double cross[4] = {0, 0, 0, 0}, energy[4] = {0, 0, 0, 0},
             sum[4] = {0, 0, 0, 0};
      std::size_t t = 0;
      for (; t + 4 <= m_; t += 4) {
        for (std::size_t l = 0; l < 4; ++l) {
          const double n = noise[t + l];
          cross[l] += r[t + l] * n;
          energy[l] += n * n;
          sum[l] += n;
        }
      }
      for (; t < m_; ++t) {
        cross[0] += r[t] * noise[t];
        energy[0] += noise[t] * noise[t];
        sum[0] += noise[t];
      }
      const double c = (cross[0] + cross[1]) + (cross[2] + cross[3]);
      const double e = (energy[0] + energy[1]) + (energy[2] + energy[3]);
      const double s = (sum[0] + sum[1]) + (sum[2] + sum[3]);
      const double lambda = lambda_[j];
      const double squared = std::max(
          0.0, residual_energy_[j] - 2.0 * lambda * c + lambda * lambda * e);
      curve[j] = nmse_or_nan(squared, m_, mean_x_, signal_mean_[j] + lambda * s * inv_m);
    }
    return curve;
  }

 private:
  std::size_t m_;
  double mean_x_;
  std::shared_ptr<const ReconstructionBasis> basis_;
  std::vector<double> lambda_;
  // Row j holds x - S_{j+1}.
  std::vector<double> residual_;
  std::vector<double> residual_energy_, signal_mean_;
};

// Executes the chunk mechanism for every k with a replayed stream, then
// advances src by the 2m draws a fast evaluator would consume.
inline std::vector<double> brute_force_nmse_curve(std::span<const double> x,
                                                  double delta, double epsilon,
                                                  Domain domain,
                                                  NoiseSource& src,
                                                  const TuneOptions& options) {
  const std::size_t m = x.size();
  std::vector<double> input(x.begin(), x.end());
  if (domain == Domain::kDifference) {
    for (std::size_t t = m; t-- > 1;) input[t] -= input[t - 1];
  }
  std::vector<double> curve(m);
  for (std::size_t k = 1; k <= m; ++k) {
    NoiseSource replay = src;
    const double lambda = chunk_lambda(m, k, delta, epsilon);
    std::vector<double> y =
        perturb_leading(input, lambda, k, replay, options.retention);
    if (domain == Domain::kDifference) {
      const RealSeq noisy(y);
      y = (options.reconstruction == Reconstruction::kRunningSum
               ? cumsum_reconstruct(noisy)
               : pairwise_reconstruct(noisy))
              .vector();
    }
    auto v = nmse(x, y);
    curve[k - 1] = v ? *v : kNaN;
  }
  unit_noise(m, src);
  return curve;
}

inline bool use_fast_path(const TuneOptions& options) {
  return options.evaluator == TuningEvaluator::kFast &&
         options.retention == Retention::kLeading;
}

// Scores one chunk across runs; dispatches to the evaluator in use.
class ChunkScorer {
 public:
  // Difference-domain bases are shared between chunks of equal length
  // through `bases`.
  ChunkScorer(std::span<const double> x, double delta, double epsilon,
              Domain domain, const TuneOptions& options,
              std::map<std::size_t, std::shared_ptr<const ReconstructionBasis>>& bases)
      : x_(x), delta_(delta), epsilon_(epsilon), domain_(domain), options_(options) {
    if (!use_fast_path(options)) return;
    if (domain == Domain::kRaw) {
      raw_.emplace(x, delta, epsilon);
      return;
    }
    auto& basis = bases[x.size()];
    if (!basis) {
      basis = std::make_shared<const ReconstructionBasis>(x.size(),
                                                          options.reconstruction);
    }
    difference_.emplace(x, delta, epsilon, basis);
  }

  std::vector<double> operator()(NoiseSource& src) const {
    if (raw_) return (*raw_)(src);
    if (difference_) return (*difference_)(src);
    return brute_force_nmse_curve(x_, delta_, epsilon_, domain_, src, options_);
  }

 private:
  std::span<const double> x_;
  double delta_, epsilon_;
  Domain domain_;
  TuneOptions options_;
  std::optional<RawCurve> raw_;
  std::optional<DifferenceCurve> difference_;
};

}  // namespace detail

// NMSE(k) for k = 1..len(x) of one chunk under one run's noise stream.
// Entry k-1 is NaN where NMSE is undefined.
inline std::vector<double> chunk_nmse_curve(std::span<const double> x,
                                            double delta, double epsilon,
                                            Domain domain,
                                            const NoiseSource& src,
                                            const TuneOptions& options = {}) {
  if (x.empty()) throw ParameterError("chunk_nmse_curve of an empty chunk");
  detail::check_epsilon(epsilon);
  detail::check_sensitivity(delta);
  NoiseSource stream = src;
  std::map<std::size_t, std::shared_ptr<const detail::ReconstructionBasis>> bases;
  return detail::ChunkScorer(x, delta, epsilon, domain, options, bases)(stream);
}

// Mean NMSE per candidate k for one chunk (index k-1); +inf where no run
// produced a usable (defined, non-negative) value.
struct KCurve {
  std::vector<double> mean_nmse;
  std::size_t best_k = 1;
};

// Tunes k for every chunk of one feature over a participant group.
// `plan` spans the longest signal of the group.
inline KTable tune_k(const std::vector<RealSeq>& group, const ChunkPlan& plan,
                     Mechanism mechanism, double epsilon, std::size_t runs,
                     const NoiseSource& src, const std::string& feature = "",
                     const std::string& group_label = "",
                     TuneOptions options = {},
                     std::vector<KCurve>* curves = nullptr) {
  if (mechanism == Mechanism::kLpa) {
    throw ParameterError("LPA has no k to tune");
  }
  if (group.empty()) throw InsufficientGroupError("cannot tune k on an empty group");
  if (runs < 1) throw ParameterError("runs must be at least 1");
  detail::check_epsilon(epsilon);
  options.runs = runs;
  const Domain domain =
      mechanism == Mechanism::kDcfpa ? Domain::kDifference : Domain::kRaw;
  std::vector<double> deltas;
  if (group.size() >= 2) {
    deltas = chunk_sensitivities(group, plan, 2, domain);
  } else {
    // A lone signal has no neighbour to differ from.
    deltas.assign(plan.chunk_count(), 0.0);
  }
  KTable table(mechanism, is_chunked(mechanism) ? plan.chunk_size() : 0, runs,
               epsilon);
  // sums[c][k-1], counts[c][k-1]
  std::vector<std::vector<double>> sums(plan.chunk_count());
  std::vector<std::vector<std::size_t>> counts(plan.chunk_count());
  for (std::size_t c = 0; c < plan.chunk_count(); ++c) {
    sums[c].assign(plan[c].length(), 0.0);
    counts[c].assign(plan[c].length(), 0);
  }
  std::map<std::size_t, std::shared_ptr<const detail::ReconstructionBasis>> bases;
  for (std::size_t s = 0; s < group.size(); ++s) {
    // Chunks this member covers; a shorter member ends in a partial chunk.
    std::vector<detail::ChunkScorer> scorers;
    scorers.reserve(plan.chunk_count());
    for (std::size_t c = 0; c < plan.chunk_count(); ++c) {
      const ChunkRange range = plan[c];
      if (group[s].size() <= range.start) break;
      const std::size_t end = std::min(range.end, group[s].size());
      scorers.emplace_back(group[s].values().subspan(range.start, end - range.start),
                           deltas[c], epsilon, domain, options, bases);
    }
    for (std::size_t r = 0; r < runs; ++r) {
      // One stream per (run, member), consumed chunk after chunk.
      NoiseSource stream = src.child({r, s});
      for (std::size_t c = 0; c < scorers.size(); ++c) {
        const std::vector<double> curve = scorers[c](stream);
        const std::size_t length = plan[c].length();
        for (std::size_t k = 1; k <= length; ++k) {
          const double v = curve[std::min(k, curve.size()) - 1];
          if (std::isnan(v) || v < 0) continue;
          sums[c][k - 1] += v;
          ++counts[c][k - 1];
        }
      }
    }
  }
  for (std::size_t c = 0; c < plan.chunk_count(); ++c) {
    const std::size_t length = plan[c].length();
    KCurve kc;
    kc.mean_nmse.resize(length);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= length; ++k) {
      const double mean = counts[c][k - 1] == 0
                              ? std::numeric_limits<double>::infinity()
                              : sums[c][k - 1] / static_cast<double>(counts[c][k - 1]);
      kc.mean_nmse[k - 1] = mean;
      if (mean < best) {
        best = mean;
        kc.best_k = k;
      }
    }
    table.set({group_label, feature, c},
              {kc.best_k, std::isinf(best) ? std::nan("") : best});
    if (curves) curves->push_back(std::move(kc));
  }
  return table;
}

}  // namespace tsdp

#endif  // TSDP_TUNING_HPP_
