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

#include "tsdp/transform.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "oracles.hpp"

namespace tsdp {
namespace {

std::vector<double> Random(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-5, 5);
  std::vector<double> x(n);
  for (double& v : x) v = u(rng);
  return x;
}

TEST(DftTest, Impulse) {
  const ComplexSeq f = dft(RealSeq({1, 0, 0, 0}));
  for (const auto& c : f) {
    EXPECT_DOUBLE_EQ(c.real(), 1.0);
    EXPECT_DOUBLE_EQ(c.imag(), 0.0);
  }
}

TEST(DftTest, ConstantIsDcOnly) {
  const ComplexSeq f = dft(RealSeq({1, 1, 1, 1}));
  EXPECT_NEAR(std::abs(f[0] - std::complex<double>(4, 0)), 0, 1e-12);
  for (std::size_t j = 1; j < 4; ++j) EXPECT_NEAR(std::abs(f[j]), 0, 1e-12);
}

TEST(DftTest, MatchesDirectSumForEveryLength) {
  for (std::size_t n = 1; n <= 256; ++n) {
    const std::vector<double> x = Random(n, static_cast<unsigned>(n));
    const ComplexSeq f = dft(RealSeq(x));
    const std::vector<oracle::Cx> ref = oracle::dft(x);
    for (std::size_t j = 0; j < n; ++j) {
      ASSERT_LT(std::abs(f[j] - ref[j]), 1e-10) << "n=" << n << " j=" << j;
    }
  }
}

TEST(DftTest, RoundTripLengthSeven) {
  const std::vector<double> x = Random(7, 77);
  const RealSeq y = pad_and_invert(dft(RealSeq(x)), 7);
  for (std::size_t t = 0; t < 7; ++t) EXPECT_NEAR(y[t], x[t], 1e-10);
}

TEST(TruncateLowTest, KeepsLeadingBins) {
  const ComplexSeq f({{4, 0}, {0, 0}, {0, 0}, {0, 0}});
  EXPECT_EQ(truncate_low(f, 1).size(), 1u);
  EXPECT_EQ(truncate_low(f, 1)[0], std::complex<double>(4, 0));
  EXPECT_EQ(truncate_low(f, 4).size(), 4u);
  const ComplexSeq g = dft(RealSeq(Random(8, 3)));
  const ComplexSeq h = truncate_low(g, 3);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(h[j], g[j]);
  EXPECT_THROW(truncate_low(f, 0), ParameterError);
  EXPECT_THROW(truncate_low(f, 5), ParameterError);
}

TEST(PadAndInvertTest, DcReconstructsConstant) {
  for (std::size_t n : {1u, 5u, 16u}) {
    const RealSeq y = pad_and_invert(ComplexSeq(std::vector<std::complex<double>>{{3.0 * n, 0}}), n);
    for (double v : y) EXPECT_NEAR(v, 3.0, 1e-12);
  }
}

TEST(PadAndInvertTest, MatchesDirectSum) {
  for (std::size_t n : {5u, 16u, 33u}) {
    const std::vector<double> x = Random(n, 11);
    const ComplexSeq f = dft(RealSeq(x));
    for (std::size_t k = 1; k <= n; ++k) {
      const ComplexSeq lead = truncate_low(f, k);
      const std::vector<double> ref = oracle::pad_invert(
          std::vector<oracle::Cx>(lead.begin(), lead.end()), n);
      const RealSeq y = pad_and_invert(lead, n);
      for (std::size_t t = 0; t < n; ++t) ASSERT_NEAR(y[t], ref[t], 1e-10);
    }
  }
}

// A one-cycle cosine lives in bin 1 and its mirror n-1. Keeping bins 0..1
// recovers half of it from the real part; mirroring recovers all of it.
TEST(PadAndInvertTest, CosineWithTwoBins) {
  constexpr std::size_t n = 32;
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t) {
    x[t] = std::cos(2 * std::numbers::pi * static_cast<double>(t) / n);
  }
  const ComplexSeq lead = truncate_low(dft(RealSeq(x)), 2);
  const std::vector<double> ref =
      oracle::pad_invert(std::vector<oracle::Cx>(lead.begin(), lead.end()), n);
  const RealSeq leading = pad_and_invert(lead, n, Retention::kLeading);
  const RealSeq mirrored = pad_and_invert(lead, n, Retention::kConjugateSymmetric);
  for (std::size_t t = 0; t < n; ++t) {
    EXPECT_NEAR(leading[t], ref[t], 1e-10);
    EXPECT_NEAR(leading[t], 0.5 * x[t], 1e-10);
    EXPECT_NEAR(mirrored[t], x[t], 1e-10);
  }
}

TEST(PadAndInvertTest, RejectsOversizedInput) {
  EXPECT_THROW(pad_and_invert(ComplexSeq({{1, 0}, {1, 0}}), 1), ParameterError);
  EXPECT_THROW(pad_and_invert(ComplexSeq(std::vector<std::complex<double>>{{1, 0}}), 0), ParameterError);
}

TEST(DiffTest, Examples) {
  EXPECT_EQ(diff_transform(RealSeq({3, 5, 4})), RealSeq({3, 2, -1}));
  EXPECT_EQ(diff_transform(RealSeq({2, 2, 2, 2})), RealSeq({2, 0, 0, 0}));
  EXPECT_EQ(cumsum_reconstruct(RealSeq({3, 2, -1})), RealSeq({3, 5, 4}));
  EXPECT_EQ(cumsum_reconstruct(RealSeq({2, 0, 0, 0})), RealSeq({2, 2, 2, 2}));
}

TEST(DiffTest, RoundTripOnIntegersIsExact) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> u(-1000, 1000);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> x(1 + trial % 50);
    for (double& v : x) v = u(rng);
    EXPECT_EQ(cumsum_reconstruct(diff_transform(RealSeq(x))), RealSeq(x));
  }
}

TEST(DiffTest, RoundTripDriftIsTiny) {
  const std::vector<double> x = Random(10'000, 8);
  const RealSeq y = cumsum_reconstruct(diff_transform(RealSeq(x)));
  for (std::size_t t = 0; t < x.size(); ++t) ASSERT_NEAR(y[t], x[t], 1e-12);
}

TEST(DiffTest, PairwiseIsNotTheInverse) {
  EXPECT_EQ(pairwise_reconstruct(RealSeq({3, 2, -1})), RealSeq({3, 5, 1}));
}

}  // namespace
}  // namespace tsdp
