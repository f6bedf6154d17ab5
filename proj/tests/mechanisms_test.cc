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

#include "tsdp/mechanisms.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "tsdp/metrics.hpp"
#include "tsdp/sensitivity.hpp"

namespace tsdp {
namespace {

RealSeq Ar1(std::size_t n, double rho, unsigned seed, double offset = 10) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> e(0, std::sqrt(1 - rho * rho));
  std::vector<double> x(n);
  double s = e(rng) / std::sqrt(1 - rho * rho);
  for (double& v : x) {
    v = offset + s;
    s = rho * s + e(rng);
  }
  return RealSeq(x);
}

double MeanNmse(const RealSeq& x, int runs, const auto& release) {
  double acc = 0;
  for (int r = 0; r < runs; ++r) acc += *nmse(x, release(r));
  return acc / runs;
}

TEST(LpaTest, ZeroSensitivityIsIdentity) {
  NoiseSource src(0, 0);
  const RealSeq x({1, 2, 3});
  EXPECT_EQ(lpa(x, 0.0, 1.0, src), x);
}

TEST(LpaTest, MeanAbsoluteErrorIsLambda) {
  NoiseSource src(0, 1);
  const RealSeq x(std::vector<double>(1'000'000, 5.0));
  const RealSeq y = lpa(x, 1.0, 1.0, src);
  double acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::abs(y[i] - x[i]);
  EXPECT_NEAR(acc / x.size(), 1.0, 0.02);
}

TEST(LpaTest, LargerBudgetLowerError) {
  const RealSeq x = Ar1(256, 0.9, 1);
  auto at = [&](double eps) {
    return MeanNmse(x, 100, [&](int r) {
      NoiseSource src(0, static_cast<std::uint64_t>(r));
      return lpa(x, 2.0, eps, src);
    });
  };
  EXPECT_LT(at(48), at(0.48));
}

TEST(LpaTest, RejectsBadBudget) {
  NoiseSource src(0, 0);
  EXPECT_THROW(lpa(RealSeq({1}), 1.0, 0.0, src), ParameterError);
  EXPECT_THROW(lpa(RealSeq({1}), -1.0, 1.0, src), ParameterError);
}

TEST(FpaLambdaTest, Examples) {
  EXPECT_NEAR(fpa_lambda(64, 8, 2, 1), 32 * std::numbers::sqrt2, 1e-12);
  EXPECT_EQ(fpa_lambda(64, 8, 0, 1), 0.0);
  EXPECT_EQ(fpa_lambda(1, 1, 1, 1), 1.0);
  EXPECT_EQ(fpa_lambda(64, 8, 2, 2), fpa_lambda(64, 8, 2, 1) / 2);
  EXPECT_THROW(fpa_lambda(4, 5, 1, 1), ParameterError);
  EXPECT_THROW(fpa_lambda(4, 0, 1, 1), ParameterError);
}

TEST(FpaTest, NoNoiseFullSpectrumIsIdentity) {
  NoiseSource src(0, 0);
  const RealSeq x = Ar1(50, 0.5, 2);
  const RealSeq y = fpa(x, 0.0, 1.0, 50, src);
  for (std::size_t t = 0; t < x.size(); ++t) EXPECT_NEAR(y[t], x[t], 1e-10);
}

TEST(FpaTest, DcOnlyGivesConstantOutput) {
  NoiseSource src(0, 5);
  const RealSeq y = fpa(RealSeq(std::vector<double>(64, 3.0)), 0.1, 1.0, 1, src);
  for (double v : y) EXPECT_NEAR(v, y[0], 1e-10);
}

TEST(FpaTest, IdentityTransformAddsLaplaceToEverySample) {
  NoiseSource a(3, 3), b(3, 3);
  const RealSeq x({1, 2, 3, 4});
  const RealSeq y = fpa<IdentityTransform>(x, 1.0, 1.0, 4, a);
  const double lambda = fpa_lambda(4, 4, 1.0, 1.0);
  for (std::size_t t = 0; t < 4; ++t) {
    const double re = lambda * b.standard_laplace();
    b.standard_laplace();  // imaginary part, dropped by the real inverse
    EXPECT_DOUBLE_EQ(y[t], x[t] + re);
  }
}

TEST(FpaTest, ErrorCurveIsUShaped) {
  // Smooth signal with a decaying spectrum: too few bins lose signal, too
  // many add noise.
  std::vector<double> v(128);
  for (std::size_t t = 0; t < v.size(); ++t) {
    v[t] = 10 + 3 * std::sin(2 * std::numbers::pi * t / 128.0) +
           std::sin(2 * std::numbers::pi * 3 * t / 128.0);
  }
  const RealSeq x(v);
  auto at = [&](std::size_t k) {
    return MeanNmse(x, 50, [&](int r) {
      NoiseSource src(1, static_cast<std::uint64_t>(r));
      return fpa(x, 1.0, 1.0, k, src, Retention::kConjugateSymmetric);
    });
  };
  const double low = at(1), mid = at(4), high = at(128);
  EXPECT_LT(mid, low);
  EXPECT_LT(mid, high);
}

TEST(CfpaTest, SingleChunkEqualsFpa) {
  const RealSeq x = Ar1(40, 0.9, 3);
  NoiseSource a(8, 8), b(8, 8);
  const ChunkParams p{1.5, 5};
  const RealSeq c = cfpa(x, ChunkPlan::whole(40), std::vector<ChunkParams>{p}, 1.0, a);
  EXPECT_EQ(c, fpa(x, 1.5, 1.0, 5, b));
}

TEST(CfpaTest, ZeroSensitivityIsIdentity) {
  const RealSeq x = Ar1(40, 0.9, 3);
  NoiseSource src(0, 0);
  const std::vector<ChunkParams> p(4, ChunkParams{0.0, 2});
  EXPECT_EQ(cfpa(x, ChunkPlan(40, 10), p, 1.0, src), x);
}

TEST(CfpaTest, ValidatesParameters) {
  const RealSeq x = Ar1(10, 0.9, 3);
  NoiseSource src(0, 0);
  EXPECT_THROW(cfpa(x, ChunkPlan(10, 4), std::vector<ChunkParams>(2), 1.0, src),
               ParameterError);
  EXPECT_THROW(cfpa(x, ChunkPlan(10, 4), std::vector<ChunkParams>(3, {1.0, 5}), 1.0, src),
               ParameterError);
  EXPECT_THROW(cfpa(x, ChunkPlan(9, 4), std::vector<ChunkParams>(3), 1.0, src),
               ParameterError);
}

TEST(CfpaTest, BeatsFpaOnLongCorrelatedSignal) {
  // Chunks see smaller sensitivities and a shorter n in the noise scale.
  std::vector<RealSeq> group;
  for (unsigned p = 0; p < 6; ++p) group.push_back(Ar1(1024, 0.95, 100 + p));
  const RealSeq& x = group[0];
  const double whole = feature_sensitivity(group, 2);
  const ChunkPlan plan(1024, 64);
  const std::vector<double> deltas = chunk_sensitivities(group, plan, 2, Domain::kRaw);
  std::vector<ChunkParams> params;
  for (double d : deltas) params.push_back({d, 1});
  const double f = MeanNmse(x, 100, [&](int r) {
    NoiseSource src(2, static_cast<std::uint64_t>(r));
    return fpa(x, whole, 24, 1, src);
  });
  const double c = MeanNmse(x, 100, [&](int r) {
    NoiseSource src(2, static_cast<std::uint64_t>(r));
    return cfpa(x, plan, params, 24, src);
  });
  EXPECT_GT(1 / c, 1 / f);
}

TEST(DcfpaTest, NoNoiseFullSpectrumIsIdentity) {
  const RealSeq x = Ar1(100, 0.9, 4);
  NoiseSource src(0, 0);
  const ChunkPlan plan(100, 32);
  std::vector<ChunkParams> params;
  for (const ChunkRange& r : plan.boundaries()) params.push_back({1e-300, r.length()});
  const RealSeq y = dcfpa(x, plan, params, 1.0, src);
  for (std::size_t t = 0; t < x.size(); ++t) EXPECT_NEAR(y[t], x[t], 1e-9);
}

TEST(DcfpaTest, ZeroSensitivityIsIdentity) {
  const RealSeq x = Ar1(20, 0.9, 4);
  NoiseSource src(0, 0);
  EXPECT_EQ(dcfpa(x, ChunkPlan(20, 8), std::vector<ChunkParams>(3, {0.0, 1}), 1.0, src),
            x);
}

TEST(DcfpaTest, PairwiseReconstructionDiffers) {
  const RealSeq x = Ar1(16, 0.9, 4);
  NoiseSource a(1, 1), b(1, 1);
  const std::vector<ChunkParams> p{{1.0, 16}};
  EXPECT_NE(dcfpa(x, ChunkPlan::whole(16), p, 10, a, Reconstruction::kRunningSum),
            dcfpa(x, ChunkPlan::whole(16), p, 10, b, Reconstruction::kPairwise));
}

TEST(DcfpaTest, SmallerChunksHigherUtility) {
  std::vector<RealSeq> group;
  for (unsigned p = 0; p < 6; ++p) group.push_back(Ar1(1024, 0.95, 200 + p));
  const RealSeq& x = group[0];
  auto utility_at = [&](std::size_t c) {
    const ChunkPlan plan(1024, c);
    std::vector<ChunkParams> params;
    for (double d : chunk_sensitivities(group, plan, 2, Domain::kDifference)) {
      params.push_back({d, 1});
    }
    return 1 / MeanNmse(x, 100, [&](int r) {
             NoiseSource src(3, static_cast<std::uint64_t>(r));
             return dcfpa(x, plan, params, 24, src);
           });
  };
  EXPECT_GE(utility_at(32), utility_at(128));
}

TEST(ComposeTest, Examples) {
  EXPECT_EQ(compose_sequential(std::vector<double>{1, 2, 3}), 6.0);
  EXPECT_EQ(compose_sequential(std::vector<double>{0.7}), 0.7);
  EXPECT_NEAR(compose_sequential(std::vector<double>(52, 0.048)), 2.496, 1e-12);
  EXPECT_EQ(compose_parallel(std::vector<double>{1, 2, 3}), 3.0);
  EXPECT_EQ(compose_parallel(std::vector<double>{0.7}), 0.7);
  EXPECT_EQ(compose_parallel(std::vector<double>(5, 2.4)), 2.4);
  EXPECT_THROW(compose_parallel(std::vector<double>{}), ParameterError);
  EXPECT_THROW(compose_sequential(std::vector<double>{1, -1}), ParameterError);
}

SensitivityTable Table(const std::vector<std::string>& features, std::size_t chunks,
                       std::size_t chunk_size, Domain domain, int norm, double value) {
  SensitivityTable t("g");
  for (const std::string& f : features) {
    for (std::size_t c = 0; c < chunks; ++c) t.set({f, chunk_size, c, domain, norm}, value);
  }
  return t;
}

TEST(ReportTest, CfpaChunksUseMaxFeaturesUseSum) {
  MechanismConfig config;
  config.mechanism = Mechanism::kCfpa;
  config.epsilon = 2.4;
  config.chunk_size = 32;
  config.fixed_k = 4;
  const MechanismReport r = build_report(
      config, Table({"a"}, 3, 32, Domain::kRaw, 2, 1.0), {"a"}, {}, 96);
  EXPECT_EQ(r.chunk_accounting, Accounting::kParallel);
  EXPECT_EQ(r.per_feature_epsilon.at("a"), 2.4);
  EXPECT_EQ(r.total_epsilon, 2.4);

  std::vector<std::string> names;
  for (int i = 0; i < 52; ++i) names.push_back("f" + std::to_string(i));
  const std::set<std::string> excluded = {"f0", "f1", "f2", "f3"};
  config.epsilon = 0.05;
  const MechanismReport all = build_report(
      config, Table(names, 3, 32, Domain::kRaw, 2, 1.0), names, excluded, 96);
  EXPECT_EQ(all.accounting, Accounting::kSequential);
  EXPECT_EQ(all.per_feature_epsilon.size(), 48u);
  EXPECT_NEAR(all.total_epsilon, 2.4, 1e-12);
}

TEST(ReportTest, ZeroSensitivityUnitsAreFree) {
  MechanismConfig config;
  config.mechanism = Mechanism::kLpa;
  config.epsilon = 1.0;
  SensitivityTable t("g");
  t.set({"a", 0, 0, Domain::kRaw, 1}, 0.0);
  t.set({"b", 0, 0, Domain::kRaw, 1}, 2.0);
  const MechanismReport r = build_report(config, t, {"a", "b"}, {}, 10);
  EXPECT_FALSE(r.per_unit[0].lambda.has_value());
  EXPECT_EQ(r.per_feature_epsilon.at("a"), 0.0);
  EXPECT_EQ(*r.per_unit[1].lambda, 2.0);
  EXPECT_EQ(r.total_epsilon, 1.0);
}

TEST(ReportTest, DoublingBudgetHalvesLambda) {
  MechanismConfig config;
  config.mechanism = Mechanism::kDcfpa;
  config.epsilon = 0.48;
  config.chunk_size = 16;
  config.fixed_k = 3;
  const SensitivityTable t = Table({"a", "b"}, 4, 16, Domain::kDifference, 2, 1.7);
  const MechanismReport r1 = build_report(config, t, {"a", "b"}, {}, 60);
  config.epsilon = 0.96;
  const MechanismReport r2 = build_report(config, t, {"a", "b"}, {}, 60);
  for (std::size_t i = 0; i < r1.per_unit.size(); ++i) {
    EXPECT_EQ(*r2.per_unit[i].lambda, *r1.per_unit[i].lambda / 2);
  }
}

TEST(ReportTest, KClampedToShortTail) {
  MechanismConfig config;
  config.mechanism = Mechanism::kCfpa;
  config.chunk_size = 16;
  config.fixed_k = 10;
  const MechanismReport r =
      build_report(config, Table({"a"}, 2, 16, Domain::kRaw, 2, 1.0), {"a"}, {}, 20);
  EXPECT_EQ(*r.per_unit[0].k, 10u);
  EXPECT_EQ(*r.per_unit[1].k, 4u);
}

TEST(ReportTest, PerDifferenceAccountingScalesWithChunkLength) {
  MechanismConfig config;
  config.mechanism = Mechanism::kDcfpa;
  config.chunk_size = 16;
  config.fixed_k = 2;
  config.epsilon = 0.5;
  config.difference_accounting = DifferenceAccounting::kPerDifference;
  const MechanismReport r = build_report(
      config, Table({"a"}, 2, 16, Domain::kDifference, 2, 1.0), {"a"}, {}, 20);
  EXPECT_EQ(r.per_unit[0].epsilon, 8.0);
  EXPECT_EQ(r.per_unit[1].epsilon, 2.0);
  EXPECT_EQ(r.total_epsilon, 8.0);
}

TEST(MechanismConfigTest, Validate) {
  MechanismConfig config;
  config.mechanism = Mechanism::kFpa;
  EXPECT_THROW(config.validate(), ConfigurationError);
  config.fixed_k = 0;
  EXPECT_THROW(config.validate(), ParameterError);
  config.fixed_k.reset();
  config.k_table = KTable(Mechanism::kCfpa, 64, 1, 1.0);
  EXPECT_THROW(config.validate(), ConfigurationError);
  config.mechanism = Mechanism::kLpa;
  EXPECT_NO_THROW(config.validate());
}

class ReleaseDecompositionTest : public ::testing::TestWithParam<Mechanism> {};

TEST_P(ReleaseDecompositionTest, BasePlusScaledNoiseEqualsRelease) {
  MechanismConfig config;
  config.mechanism = GetParam();
  config.chunk_size = 16;
  config.fixed_k = 3;
  const RealSeq x = Ar1(50, 0.9, 9);
  const ChunkPlan plan = config.plan(60);
  const SensitivityRequest req = config.sensitivity_request();
  SensitivityTable t("g");
  for (std::size_t c = 0; c < plan.chunk_count(); ++c) {
    t.set({"a", req.chunk_size, c, req.domain, req.norm}, c == 1 ? 0.0 : 1.3);
  }
  for (double eps : {0.48, 4.8, 48.0}) {
    config.epsilon = eps;
    NoiseSource a(4, 4), b(4, 4);
    const RealSeq y = release_signal(x, config, t, "a", plan, a);
    const std::vector<double> base = release_base(x, config, t, "a", plan);
    const std::vector<double> noise = release_noise(x.size(), config, t, "a", plan, b);
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_NEAR(base[i] + noise[i] / eps, y[i], 1e-9 * (1 + std::abs(y[i])));
    }
  }
}

INSTANTIATE_TEST_SUITE_P(AllMechanisms, ReleaseDecompositionTest,
                         ::testing::Values(Mechanism::kLpa, Mechanism::kFpa,
                                           Mechanism::kCfpa, Mechanism::kDcfpa));

}  // namespace
}  // namespace tsdp
