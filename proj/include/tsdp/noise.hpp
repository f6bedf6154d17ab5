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

// Seeded, stream-split randomness. Every distribution is derived from the raw
// 64-bit output of std::mt19937_64, whose sequence is fixed by the standard,
// so draws are reproducible across platforms and standard libraries.
//
// Not cryptographically secure and not hardened against floating-point side
// channels.

#ifndef TSDP_NOISE_HPP_
#define TSDP_NOISE_HPP_

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <vector>

#include "tsdp/core.hpp"

namespace tsdp {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Folds logical coordinates (run, recording, feature, chunk, ...) into one
// stream id. Order matters: {1, 2} and {2, 1} are different streams.
inline std::uint64_t derive_stream(std::initializer_list<std::uint64_t> coords) {
  std::uint64_t h = 0x6a09e667f3bcc908ULL;
  for (std::uint64_t c : coords) h = splitmix64(h ^ splitmix64(c));
  return h;
}

class NoiseSource {
 public:
  NoiseSource(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed),
        stream_id_(stream_id),
        engine_(splitmix64(seed ^ splitmix64(stream_id ^ 0x3c6ef372fe94f82bULL))) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // A source for a sub-stream, independent of this source's position.
  NoiseSource child(std::initializer_list<std::uint64_t> coords) const {
    std::uint64_t id = stream_id_;
    for (std::uint64_t c : coords) id = derive_stream({id, c});
    return NoiseSource(seed_, id);
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Laplace(1) by inverse CDF: u on (-1/2, 1/2), -sign(u) ln(1 - 2|u|).
  double standard_laplace() {
    const double u = uniform_open() - 0.5;
    const double magnitude = -std::log1p(-2.0 * std::abs(u));
    return u < 0 ? -magnitude : magnitude;
  }

  // N(0, 1) via Box-Muller; one normal per call, the second draw is not
  // cached so the stream position stays a simple function of the call count.
  double standard_normal() {
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, bound), unbiased by rejection.
  std::uint64_t uniform_index(std::uint64_t bound) {
    if (bound == 0) throw ParameterError("uniform_index bound must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

// One zero-mean Laplace draw with scale lambda (variance 2 lambda^2).
inline double sample_laplace(double lambda, NoiseSource& src) {
  if (!(lambda > 0) || !std::isfinite(lambda)) {
    throw ParameterError("Laplace scale must be positive and finite");
  }
  return lambda * src.standard_laplace();
}

// n independent Laplace(lambda) draws.
inline RealSeq laplace_vector(std::size_t n, double lambda, NoiseSource& src) {
  if (n == 0) throw ParameterError("laplace_vector length must be positive");
  if (!(lambda > 0) || !std::isfinite(lambda)) {
    throw ParameterError("Laplace scale must be positive and finite");
  }
  std::vector<double> out(n);
  for (double& v : out) v = sample_laplace(lambda, src);
  return RealSeq(std::move(out));
}

// Analytic Laplace(lambda) CDF.
inline double laplace_cdf(double x, double lambda) {
  return x < 0 ? 0.5 * std::exp(x / lambda) : 1.0 - 0.5 * std::exp(-x / lambda);
}

}  // namespace tsdp

#endif  // TSDP_NOISE_HPP_
