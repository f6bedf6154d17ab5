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

// Drives the tsdp binary end to end.

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "json.hpp"
#include "tsdp/text.hpp"

namespace {

namespace fs = std::filesystem;
using ::testing::HasSubstr;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "tsdp_cli_test";
    fs::remove_all(root_);
    fs::create_directories(root_);
    const Result r = Run("synth --out " + (root_ / "corpus").string() +
                         " --participants 4 --length 128 --features 3 --zero-features 1");
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static Result Run(const std::string& args) {
    const fs::path out = root_ / "stdout.txt", err = root_ / "stderr.txt";
    const std::string cmd = std::string(TSDP_CLI_PATH) + " " + args + " >" +
                            out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, Slurp(out), Slurp(err)};
  }

  static std::string Manifest() { return (root_ / "corpus" / "manifest.json").string(); }
  static std::string Dir(const std::string& name) { return (root_ / name).string(); }

  static fs::path root_;
};

fs::path CliTest::root_;

TEST_F(CliTest, HelpListsEveryFlag) {
  const Result r = Run("perturb --help");
  EXPECT_EQ(r.code, 0);
  for (const char* flag : {"--manifest", "--mechanism", "--epsilon", "--chunk-size", "--k",
                           "--k-file", "--sensitivity-file", "--clamp", "--out"}) {
    EXPECT_THAT(r.out, HasSubstr(flag));
  }
  EXPECT_THAT(Run("--help").out, HasSubstr("--seed"));
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(Run("perturb --bogus").code, 2);
  EXPECT_EQ(Run("").code, 2);
  EXPECT_EQ(Run("perturb --manifest " + Manifest() + " --mechanism xyz --epsilon 1 --out " +
                Dir("x"))
                .code,
            2);
  EXPECT_EQ(Run("perturb --manifest " + Manifest() + " --mechanism fpa --epsilon 0 --out " +
                Dir("x"))
                .code,
            2);
}

TEST_F(CliTest, DataErrorsExitThree) {
  EXPECT_EQ(Run("sweep --manifest " + Dir("missing.json")).code, 3);
  tsdp::write_text(Dir("bad.csv"), "feature,chunk\n");
  EXPECT_EQ(Run("perturb --manifest " + Manifest() +
                " --mechanism fpa --epsilon 1 --sensitivity-file " + Dir("bad.csv") +
                " --out " + Dir("x"))
                .code,
            3);
}

TEST_F(CliTest, SynthShape) {
  const nlohmann::json j = nlohmann::json::parse(Slurp(Manifest()));
  EXPECT_EQ(j["recordings"].size(), 12u);
  EXPECT_EQ(j["excluded_features"][0], "wordbook_1");
}

TEST_F(CliTest, PerturbWritesCorpusAndReport) {
  const Result r = Run("perturb --manifest " + Manifest() +
                       " --mechanism fpa --epsilon 0.48 --tune-runs 5 --out " + Dir("fpa"));
  ASSERT_EQ(r.code, 0) << r.err;
  const nlohmann::json report = nlohmann::json::parse(Slurp(Dir("fpa") + "/report.json"));
  EXPECT_EQ(report["mechanism"], "fpa");
  ASSERT_EQ(report["groups"].size(), 3u);
  // Three included features at 0.48 each.
  EXPECT_NEAR(report["groups"][0]["total_epsilon"].get<double>(), 1.44, 1e-12);
  EXPECT_TRUE(fs::exists(Dir("fpa") + "/manifest.json"));
  EXPECT_TRUE(fs::exists(Dir("fpa") + "/p01_comic.csv"));
}

TEST_F(CliTest, LpaWarnsAboutChunkSize) {
  const Result r = Run("perturb --manifest " + Manifest() +
                       " --mechanism lpa --epsilon 1 --chunk-size 32 --out " + Dir("lpa"));
  EXPECT_EQ(r.code, 0);
  EXPECT_THAT(r.err, HasSubstr("--chunk-size is ignored"));
  EXPECT_FALSE(nlohmann::json::parse(Slurp(Dir("lpa") + "/report.json"))
                   .contains("chunk_size"));
}

TEST_F(CliTest, PerturbIsReproducibleAcrossJobs) {
  const std::string base = "perturb --manifest " + Manifest() +
                           " --mechanism dcfpa --epsilon 2.4 --chunk-size 32 --tune-runs 5";
  ASSERT_EQ(Run("--jobs 1 " + base + " --out " + Dir("d1")).code, 0);
  ASSERT_EQ(Run("--jobs 4 " + base + " --out " + Dir("d2")).code, 0);
  for (const auto& e : fs::directory_iterator(Dir("d1"))) {
    EXPECT_EQ(Slurp(e.path()), Slurp(fs::path(Dir("d2")) / e.path().filename()))
        << e.path().filename();
  }
}

TEST_F(CliTest, TuneThenPerturbWithFiles) {
  ASSERT_EQ(Run("tune-k --manifest " + Manifest() +
                " --mechanism cfpa --chunk-size 64 --runs 5 --out " + Dir("k.csv"))
                .code,
            0);
  ASSERT_EQ(Run("sensitivity --manifest " + Manifest() + " --out " + Dir("s.csv")).code, 0);
  const Result r = Run("perturb --manifest " + Manifest() +
                       " --mechanism cfpa --chunk-size 64 --epsilon 1 --k-file " +
                       Dir("k.csv") + " --sensitivity-file " + Dir("s.csv") + " --out " +
                       Dir("cfpa"));
  EXPECT_EQ(r.code, 0) << r.err;
  // A table tuned for another chunk size does not apply.
  EXPECT_EQ(Run("perturb --manifest " + Manifest() +
                " --mechanism cfpa --chunk-size 32 --epsilon 1 --k-file " + Dir("k.csv") +
                " --out " + Dir("x"))
                .code,
            2);
}

TEST_F(CliTest, SweepSmokeIsFastAndReproducible) {
  const std::string args = "sweep --manifest " + Manifest() + " --runs 1 --tune-runs 1";
  const auto start = std::chrono::steady_clock::now();
  ASSERT_EQ(Run(args + " --out " + Dir("s1.csv")).code, 0);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(seconds, 10.0);
  ASSERT_EQ(Run("--jobs 3 " + args + " --out " + Dir("s2.csv")).code, 0);
  EXPECT_EQ(Slurp(Dir("s1.csv")), Slurp(Dir("s2.csv")));
  // 1 LPA + 1 FPA + 3 CFPA + 3 DCFPA configurations, 5 budgets each.
  std::istringstream lines(Slurp(Dir("s1.csv")));
  std::string line;
  int rows = -1;
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, 40);
}

TEST_F(CliTest, ConfigFileMergesWithFlagsWinning) {
  tsdp::write_text(Dir("grid.toml"),
                   "[sweep]\nmechanisms = [\"lpa\"]\nepsilons = [1.0, 2.0]\nruns = 1\n");
  const Result r = Run("--config " + Dir("grid.toml") + " sweep --manifest " + Manifest() +
                       " --epsilons 3");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out,
            "mechanism,chunk_size,epsilon,mean_utility,mean_nmse,runs,flagged_rows\n" +
                r.out.substr(r.out.find('\n') + 1));
  EXPECT_THAT(r.out, HasSubstr("lpa,,3,"));
  EXPECT_THAT(r.out, ::testing::Not(HasSubstr("lpa,,1,")));
}

TEST_F(CliTest, CorrWritesOneCurvePerGroup) {
  const Result r = Run("corr --manifest " + Manifest() + " --feature f00 --max-lag 4 --out " +
                       Dir("corr"));
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* label : {"comic", "newspaper", "textbook"}) {
    EXPECT_THAT(Slurp(Dir("corr") + "/corr_" + label + ".csv"), HasSubstr("delta_t,r\n0,1\n"));
  }
  EXPECT_EQ(Run("corr --manifest " + Manifest() + " --feature nope --out " + Dir("corr")).code,
            2);
}

TEST_F(CliTest, ClassifySummary) {
  ASSERT_EQ(Run("perturb --manifest " + Manifest() +
                " --mechanism cfpa --chunk-size 32 --epsilon 48 --k 4 --out " + Dir("c48"))
                .code,
            0);
  const Result r = Run("classify --manifest " + Dir("c48") + "/manifest.json --majority --out " +
                       Dir("folds.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_THAT(r.out, HasSubstr("label_kind,mechanism,epsilon,chunk_size,mode,accuracy\n"));
  EXPECT_THAT(r.out, HasSubstr("document_type,cfpa,48,32,instance,"));
  EXPECT_THAT(r.out, HasSubstr("document_type,cfpa,48,32,voted,"));
  EXPECT_THAT(Slurp(Dir("folds.csv")), HasSubstr("participant,instances"));
  EXPECT_THAT(Run("classify --manifest " + Manifest()).out,
              HasSubstr("document_type,none,,,instance,"));
}

}  // namespace
