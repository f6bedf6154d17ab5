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

// Non-unitary DFT: the forward transform is unnormalized and the inverse
// carries the full 1/n factor.
//
//   F[j] = sum_t x[t] exp(-2 pi i j t / n)
//   x[t] = (1/n) sum_j F[j] exp(+2 pi i j t / n)
//
// Power-of-two lengths use an iterative radix-2 FFT; all other lengths use
// direct summation with an exact (j * t mod n) twiddle table.

#ifndef TSDP_TRANSFORM_HPP_
#define TSDP_TRANSFORM_HPP_

#include <bit>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "tsdp/core.hpp"

namespace tsdp {

using Complex = std::complex<double>;

// Which coefficients pad_and_invert reconstructs from.
enum class Retention {
  // Only the given leading bins 0..k-1; the inverse keeps the real part.
  kLeading,
  // Leading bins plus their conjugate mirrors n-j, giving a real inverse.
  kConjugateSymmetric,
};

namespace detail {

// exp(sign * 2 pi i r / n) for r in [0, n).
inline std::vector<Complex> twiddle_table(std::size_t n, double sign) {
  std::vector<Complex> table(n);
  for (std::size_t r = 0; r < n; ++r) {
    table[r] = std::polar(1.0, sign * 2.0 * std::numbers::pi *
                                   static_cast<double>(r) /
                                   static_cast<double>(n));
  }
  return table;
}

inline void fft_radix2(std::vector<Complex>& a, double sign) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const std::vector<Complex> w = twiddle_table(n, sign);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t stride = n / len;
    const std::size_t half = len / 2;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t m = 0; m < half; ++m) {
        const Complex u = a[start + m];
        const Complex v = a[start + m + half] * w[m * stride];
        a[start + m] = u + v;
        a[start + m + half] = u - v;
      }
    }
  }
}

inline std::vector<Complex> dft_direct(std::span<const Complex> a, double sign) {
  const std::size_t n = a.size();
  const std::vector<Complex> w = twiddle_table(n, sign);
  std::vector<Complex> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    Complex acc = 0;
    for (std::size_t t = 0; t < n; ++t) acc += a[t] * w[(j * t) % n];
    out[j] = acc;
  }
  return out;
}

// Unnormalized transform in either direction (sign -1 forward, +1 inverse).
inline std::vector<Complex> transform(std::vector<Complex> a, double sign) {
  if (a.size() > 1 && std::has_single_bit(a.size())) {
    fft_radix2(a, sign);
    return a;
  }
  return dft_direct(a, sign);
}

inline std::vector<Complex> forward(std::span<const double> x) {
  return transform(std::vector<Complex>(x.begin(), x.end()), -1.0);
}

// Real part of the normalized inverse of a full-length spectrum.
inline std::vector<double> inverse_real(std::vector<Complex> spectrum) {
  const double n = static_cast<double>(spectrum.size());
  std::vector<Complex> x = transform(std::move(spectrum), +1.0);
  std::vector<double> out(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) out[t] = x[t].real() / n;
  return out;
}

// Zero-pads the leading coefficients to length n, optionally mirroring them.
inline std::vector<Complex> pad_spectrum(std::span<const Complex> leading,
                                         std::size_t n, Retention retention) {
  std::vector<Complex> full(n, Complex(0, 0));
  std::copy(leading.begin(), leading.end(), full.begin());
  if (retention == Retention::kConjugateSymmetric) {
    for (std::size_t j = 1; j < leading.size(); ++j) {
      if (n - j >= leading.size()) full[n - j] = std::conj(leading[j]);
    }
  }
  return full;
}

}  // namespace detail

inline ComplexSeq dft(const RealSeq& x) {
  return ComplexSeq(detail::forward(x.values()));
}

// First k coefficients (indices 0..k-1), i.e. the k lowest frequencies.
inline ComplexSeq truncate_low(const ComplexSeq& spectrum, std::size_t k) {
  if (k < 1 || k > spectrum.size()) {
    throw ParameterError("truncate_low: k=" + std::to_string(k) +
                         " outside [1, " + std::to_string(spectrum.size()) +
                         "]");
  }
  return ComplexSeq(std::vector<Complex>(spectrum.begin(),
                                         spectrum.begin() + k));
}

// Zero-pads to length n, applies the inverse DFT and keeps the real part.
inline RealSeq pad_and_invert(const ComplexSeq& leading, std::size_t n,
                              Retention retention = Retention::kLeading) {
  if (n == 0 || leading.size() > n) {
    throw ParameterError("pad_and_invert: " + std::to_string(leading.size()) +
                         " coefficients do not fit length " +
                         std::to_string(n));
  }
  return RealSeq(detail::inverse_real(
      detail::pad_spectrum(leading.values(), n, retention)));
}

// d[0] = x[0], d[t] = x[t] - x[t-1].
inline RealSeq diff_transform(const RealSeq& x) {
  std::vector<double> d(x.size());
  d[0] = x[0];
  for (std::size_t t = 1; t < x.size(); ++t) d[t] = x[t] - x[t - 1];
  return RealSeq(std::move(d));
}

// Running-sum inverse of diff_transform.
inline RealSeq cumsum_reconstruct(const RealSeq& d) {
  std::vector<double> x(d.size());
  x[0] = d[0];
  for (std::size_t t = 1; t < d.size(); ++t) x[t] = x[t - 1] + d[t];
  return RealSeq(std::move(x));
}

// Adjacent-pair sum x[t] = d[t] + d[t-1], x[0] = d[0]. Not an inverse of
// diff_transform; kept to compare against the running-sum reconstruction.
inline RealSeq pairwise_reconstruct(const RealSeq& d) {
  std::vector<double> x(d.size());
  x[0] = d[0];
  for (std::size_t t = 1; t < d.size(); ++t) x[t] = d[t] + d[t - 1];
  return RealSeq(std::move(x));
}

}  // namespace tsdp

#endif  // TSDP_TRANSFORM_HPP_
