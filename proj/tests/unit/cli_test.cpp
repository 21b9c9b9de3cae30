// Copyright 2026 The Calibre Authors
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

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "calibre/io.hpp"
#include "gtest/gtest.h"
#include "json.hpp"

namespace calibre {
namespace {

namespace fs = std::filesystem;

const std::string kDataDir = CALIBRE_TEST_DATA_DIR;
const std::string kFixtureDir = CALIBRE_FIXTURE_DIR;
const std::string kCli = CALIBRE_CLI_PATH;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("calibre_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  /// Runs the CLI; stdout and stderr land in out_ and err_.
  int Run(const std::string& args) {
    const fs::path out = dir_ / "stdout", err = dir_ / "stderr";
    const std::string cmd = "CALIBRE_LOG=quiet \"" + kCli + "\" " + args + " >\"" + out.string() +
                            "\" 2>\"" + err.string() + "\"";
    const int rc = std::system(cmd.c_str());
    out_ = read_file(out.string());
    err_ = read_file(err.string());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }

  std::string Path(const std::string& name) const { return "\"" + (dir_ / name).string() + "\""; }

  fs::path dir_;
  std::string out_, err_;
};

const std::string kConll = "\"" + kDataDir + "/conll/two_sentences.conll\"";

TEST_F(CliTest, EvalOnIdenticalFilesScoresOne) {
  ASSERT_EQ(Run("eval --task ner --pred " + kConll + " --gold " + kConll), 0) << err_;
  const auto j = nlohmann::json::parse(out_);
  EXPECT_DOUBLE_EQ(j["entity"]["f1"].get<double>(), 1.0);
  EXPECT_EQ(j["errors"]["errors"].get<int>(), 0);
}

TEST_F(CliTest, MissingInputExitsOneNamingThePath) {
  const std::string missing = (dir_ / "absent.conll").string();
  EXPECT_EQ(Run("eval --task ner --pred \"" + missing + "\" --gold " + kConll), 1);
  EXPECT_NE(err_.find(missing), std::string::npos) << err_;
}

TEST_F(CliTest, MalformedInputExitsOne) {
  write_file((dir_ / "bad.jsonl").string(), "{\"page_id\": \n");
  EXPECT_EQ(Run("ingest --dump " + Path("bad.jsonl") + " --out " + Path("p.jsonl")), 1);
}

TEST_F(CliTest, InvalidArgumentsExitTwo) {
  EXPECT_EQ(Run("eval --task pos --pred " + kConll + " --gold " + kConll), 2);
  EXPECT_EQ(Run("no-such-stage"), 2);
  EXPECT_EQ(Run("eval --task ner --gold " + kConll), 2);
  EXPECT_EQ(Run("schedule --size en"), 2);
}

TEST_F(CliTest, FlagBeatsConfigBeatsDefault) {
  const std::string dump = "\"" + kFixtureDir + "/minidump.jsonl\"";
  ASSERT_EQ(Run("ingest --dump " + dump + " --out " + Path("p.jsonl") + " --stats " + Path("s.json")), 0);
  auto phi = [&](const std::string& extra) {
    EXPECT_EQ(Run(extra + " synth --passages " + Path("p.jsonl") + " --out " + Path("r.jsonl")), 0) << err_;
    return nlohmann::json::parse(out_)["phi"].get<double>();
  };
  EXPECT_DOUBLE_EQ(phi(""), 0.5);
  write_file((dir_ / "run.toml").string(), "[synth]\nphi = 0.25\n");
  EXPECT_DOUBLE_EQ(phi("--config " + Path("run.toml")), 0.25);
  ASSERT_EQ(Run("--config " + Path("run.toml") + " synth --phi 0.75 --passages " + Path("p.jsonl") +
                " --out " + Path("r.jsonl")),
            0);
  EXPECT_DOUBLE_EQ(nlohmann::json::parse(out_)["phi"].get<double>(), 0.75);
}

TEST_F(CliTest, PairsAcceptsPredictionsJsonl) {
  write_file((dir_ / "pred.jsonl").string(), "{\"sentence_id\": 1, \"spans\": [[0, 1, \"ORG\"]]}\n");
  ASSERT_EQ(Run("pairs --gold " + kConll + " --predictions " + Path("pred.jsonl") + " --out " +
                Path("pairs.jsonl")),
            0)
      << err_;
  const auto j = nlohmann::json::parse(out_);
  EXPECT_EQ(j["sentences"].get<int>(), 2);
  EXPECT_GT(j["examples"].get<int>(), 0);
  write_file((dir_ / "bad.jsonl").string(), "{\"sentence_id\": 9, \"spans\": []}\n");
  EXPECT_EQ(Run("pairs --gold " + kConll + " --predictions " + Path("bad.jsonl") + " --out " +
                Path("pairs.jsonl")),
            1);
}

TEST_F(CliTest, AnalyzeMatchesGoldenReport) {
  ASSERT_EQ(Run("analyze --dump \"" + kFixtureDir + "/minidump.jsonl\" --conll " + kConll + " --seed 7"), 0)
      << err_;
  EXPECT_EQ(out_, read_file(kDataDir + "/cli/analyze_golden.json"));
}

}  // namespace
}  // namespace calibre
