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

#include "tsdp/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "oracles.hpp"
#include "tsdp/text.hpp"

namespace tsdp {
namespace {

TEST(LwDistanceTest, Examples) {
  EXPECT_EQ(lw_distance(RealSeq({1, 2}), RealSeq({1, 2}), 2), 0.0);
  EXPECT_EQ(lw_distance(RealSeq({1, 2}), RealSeq({3, 4}), 1), 4.0);
  EXPECT_DOUBLE_EQ(lw_distance(RealSeq({1, 2}), RealSeq({3, 4}), 2), std::sqrt(8.0));
  EXPECT_THROW(lw_distance(RealSeq({1}), RealSeq({1, 2}), 2), ParameterError);
  EXPECT_THROW(lw_distance(RealSeq({1}), RealSeq({1}), 3), ParameterError);
}

TEST(FeatureSensitivityTest, Examples) {
  EXPECT_EQ(feature_sensitivity({RealSeq({1, 2}), RealSeq({3, 4})}, 1), 4.0);
  EXPECT_EQ(feature_sensitivity({RealSeq({1, 2}), RealSeq({1, 2}), RealSeq({1, 2})}, 2),
            0.0);
  EXPECT_DOUBLE_EQ(
      feature_sensitivity({RealSeq({1, 2, 3}), RealSeq({2, 2}), RealSeq({0, 0, 0})}, 2),
      std::sqrt(14.0));
}

TEST(FeatureSensitivityTest, NeedsTwoVectors) {
  EXPECT_THROW(feature_sensitivity({RealSeq({1})}, 2), InsufficientGroupError);
}

TEST(FeatureSensitivityTest, PermutationInvariant) {
  std::vector<RealSeq> g = {RealSeq({1, 5}), RealSeq({2}), RealSeq({0, 3, 9})};
  const double a = feature_sensitivity(g, 2);
  std::reverse(g.begin(), g.end());
  EXPECT_EQ(feature_sensitivity(g, 2), a);
}

TEST(ChunkSensitivitiesTest, Examples) {
  const std::vector<RealSeq> g = {RealSeq({1, 2, 3, 4}), RealSeq({1, 2, 3, 8})};
  EXPECT_EQ(chunk_sensitivities(g, ChunkPlan(4, 2), 1, Domain::kRaw),
            (std::vector<double>{0, 4}));
  EXPECT_EQ(chunk_sensitivities({RealSeq({0, 5}), RealSeq({0, 1})}, ChunkPlan(2, 2), 1,
                                Domain::kDifference),
            (std::vector<double>{4}));
  EXPECT_EQ(chunk_sensitivities(g, ChunkPlan::whole(4), 2, Domain::kRaw)[0],
            feature_sensitivity(g, 2));
  EXPECT_THROW(chunk_sensitivities(g, ChunkPlan(5, 2), 1, Domain::kRaw), ParameterError);
}

TEST(ChunkSensitivitiesTest, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(2, 6), len(1, 20), chunk(1, 8);
  std::normal_distribution<double> value(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<RealSeq> group;
    std::vector<std::vector<double>> raw;
    const int members = size(rng);
    for (int p = 0; p < members; ++p) {
      std::vector<double> v(len(rng));
      for (double& x : v) x = value(rng);
      raw.push_back(v);
      group.emplace_back(v);
    }
    const std::size_t n = detail::max_length(group);
    const ChunkPlan plan(n, chunk(rng));
    for (int w : {1, 2}) {
      EXPECT_EQ(feature_sensitivity(group, w),
                oracle::pair_sensitivity(raw, 0, n, false, w));
      for (Domain d : {Domain::kRaw, Domain::kDifference}) {
        const std::vector<double> got = chunk_sensitivities(group, plan, w, d);
        for (std::size_t c = 0; c < plan.chunk_count(); ++c) {
          EXPECT_EQ(got[c], oracle::pair_sensitivity(raw, plan[c].start, plan[c].end,
                                                     d == Domain::kDifference, w));
        }
      }
    }
  }
}

TEST(ChunkSensitivitiesTest, WholeSignalBoundsRawChunks) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> value(0, 1);
  std::vector<RealSeq> group;
  for (int p = 0; p < 5; ++p) {
    std::vector<double> v(40);
    for (double& x : v) x = value(rng);
    group.emplace_back(v);
  }
  const double whole = feature_sensitivity(group, 2);
  for (double c : chunk_sensitivities(group, ChunkPlan(40, 7), 2, Domain::kRaw)) {
    EXPECT_LE(c, whole);
  }
}

Corpus SmallCorpus() {
  auto m = [](const std::string& id, std::vector<double> a, std::vector<double> z) {
    return FeatureMatrix(id, id, {},
                         {{"a", RealSeq(std::move(a))}, {"z", RealSeq(std::move(z))}});
  };
  return Corpus({m("p1", {1, 2, 3, 4}, {0, 0, 0, 0}), m("p2", {1, 2, 3, 8}, {0, 0, 0, 0})},
                {"a", "z"});
}

TEST(SensitivityTableTest, ComputeAndLookUp) {
  const Corpus corpus = SmallCorpus();
  const SensitivityTable t = compute_sensitivity_table(
      corpus, {0, 1}, "all", {{0, Domain::kRaw, 1}, {2, Domain::kRaw, 1}});
  EXPECT_EQ(t.at({"a", 0, 0, Domain::kRaw, 1}), 4.0);
  EXPECT_EQ(t.at({"a", 2, 1, Domain::kRaw, 1}), 4.0);
  EXPECT_EQ(t.at({"z", 2, 0, Domain::kRaw, 1}), 0.0);
  EXPECT_THROW(t.at({"a", 0, 0, Domain::kRaw, 2}), ConfigurationError);
  EXPECT_NO_THROW(t.check_invariants());
}

TEST(SensitivityTableTest, RejectsBadValues) {
  SensitivityTable t("g");
  EXPECT_THROW(t.set({"a", 0, 0, Domain::kRaw, 2}, -1.0), ParameterError);
  EXPECT_THROW(t.set({"a", 0, 0, Domain::kRaw, 2}, std::nan("")), ParameterError);
  t.set({"a", 0, 0, Domain::kRaw, 2}, 1.0);
  t.set({"a", 4, 0, Domain::kRaw, 2}, 2.0);
  EXPECT_THROW(t.check_invariants(), InvariantError);
}

TEST(SensitivityTableTest, CsvRoundTrip) {
  const Corpus corpus = SmallCorpus();
  const std::vector<SensitivityRequest> req = {{0, Domain::kRaw, 2},
                                               {2, Domain::kDifference, 1}};
  const std::vector<SensitivityTable> tables = {
      compute_sensitivity_table(corpus, {0, 1}, "comic", req),
      compute_sensitivity_table(corpus, {0, 1}, "textbook", req)};
  const std::string path =
      (std::filesystem::temp_directory_path() / "tsdp_sens_test.csv").string();
  write_text(path, sensitivity_csv(tables));
  const std::vector<SensitivityTable> back = read_sensitivity_csv(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].group_label(), "comic");
  EXPECT_EQ(back[0].entries(), tables[0].entries());
  EXPECT_EQ(back[1].entries(), tables[1].entries());
  write_text(path, "feature,chunk\n");
  EXPECT_THROW(read_sensitivity_csv(path), LoadError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace tsdp
