// Copyright (c) 2026 The PMVC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "cli_pipeline.h"

namespace pmvc {
namespace {

namespace fs = std::filesystem;
using testing::Cli;

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    ws_ = new fs::path(testing::MakeCliWorkspace(fs::temp_directory_path() / "pmvc_cli_test"));
    codes_a_ = new auto(testing::RunFullPipeline(*ws_, "run_a"));
    codes_b_ = new auto(testing::RunFullPipeline(*ws_, "run_b"));
  }
  static void TearDownTestSuite() {
    delete ws_;
    delete codes_a_;
    delete codes_b_;
  }

  static fs::path* ws_;
  static std::vector<std::pair<std::string, int>>* codes_a_;
  static std::vector<std::pair<std::string, int>>* codes_b_;
};

fs::path* CliTest::ws_ = nullptr;
std::vector<std::pair<std::string, int>>* CliTest::codes_a_ = nullptr;
std::vector<std::pair<std::string, int>>* CliTest::codes_b_ = nullptr;

TEST_F(CliTest, EveryVerbSucceeds) {
  for (const auto& [verb, code] : *codes_a_) EXPECT_EQ(code, 0) << verb;
}

TEST_F(CliTest, RepeatedRunsAreBitwiseIdentical) {
  for (const auto& name : testing::PipelineArtifacts()) {
    const fs::path a = *ws_ / "run_a" / name, b = *ws_ / "run_b" / name;
    ASSERT_TRUE(fs::exists(a)) << name;
    EXPECT_EQ(testing::ReadFileBytes(a), testing::ReadFileBytes(b)) << name;
  }
}

TEST_F(CliTest, ReportsExist) {
  EXPECT_TRUE(fs::exists(*ws_ / "run_a" / "sweep" / "partition_4_4" / "checkpoints" / "latest.ckpt"));
  EXPECT_TRUE(fs::exists(*ws_ / "run_a" / "sweep" / "partition_2_6" / "loss.log"));
}

TEST_F(CliTest, DifferentSeedChangesArtifacts) {
  const std::string run = (*ws_ / "run_seed").string();
  ASSERT_EQ(Cli({"prepare", "--corpus", (*ws_ / "corpus").string(), "--config",
                 (*ws_ / "tiny.json").string(), "--seed", "6", "--run-dir", run})
                .code,
            0);
  ASSERT_EQ(Cli({"pretrain-speaker", "--run-dir", run}).code, 0);
  EXPECT_NE(testing::ReadFileBytes(fs::path(run) / "speaker.ckpt"),
            testing::ReadFileBytes(*ws_ / "run_a" / "speaker.ckpt"));
}

TEST_F(CliTest, MissingPrerequisiteIsNamed) {
  const std::string run = (*ws_ / "run_noprereq").string();
  ASSERT_EQ(Cli({"prepare", "--corpus", (*ws_ / "corpus").string(), "--config",
                 (*ws_ / "tiny.json").string(), "--run-dir", run})
                .code,
            0);
  const auto r = Cli({"train", "--run-dir", run});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error[E_STATE]"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("speaker checkpoint"), std::string::npos) << r.err;
  const auto e = Cli({"evaluate", "--run-dir", run});
  EXPECT_EQ(e.code, 1);
  EXPECT_NE(e.err.find("checkpoint"), std::string::npos);
}

TEST_F(CliTest, ExitCodes) {
  const std::string run = (*ws_ / "run_a").string();
  EXPECT_EQ(Cli({}).code, 1);
  EXPECT_EQ(Cli({"frobnicate"}).code, 1);
  const auto unknown = Cli({"train", "--set", "model.bogus=1", "--run-dir", run});
  EXPECT_EQ(unknown.code, 1);
  EXPECT_NE(unknown.err.find("error[E_CONFIG]"), std::string::npos);
  EXPECT_EQ(Cli({"augment", "--in", "/nonexistent/x.wav", "--out", "/tmp/x.mel", "--run-dir", run}).code, 3);
  EXPECT_EQ(Cli({"augment", "--in", run + "/aug.mel", "--out", run + "/aug2.mel", "--rate-low", "0.3",
                 "--run-dir", run})
                .code,
            1);
  fs::create_directories(*ws_ / "empty");
  EXPECT_EQ(Cli({"prepare", "--corpus", (*ws_ / "empty").string(), "--run-dir", (*ws_ / "r2").string()}).code,
            1);
}

TEST_F(CliTest, HelpListsConfigKeys) {
  const auto r = Cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("model.content_dim"), std::string::npos);
  EXPECT_NE(r.out.find("train.lr_final_fraction"), std::string::npos);
}

TEST_F(CliTest, RunDirFromEnvironment) {
  const fs::path run = *ws_ / "run_env";
  ::setenv(kRunDirEnv, run.c_str(), 1);
  const auto r = Cli({"prepare", "--corpus", (*ws_ / "corpus").string(), "--config",
                      (*ws_ / "tiny.json").string()});
  ::unsetenv(kRunDirEnv);
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(run / "manifest.json"));
}

}  // namespace
}  // namespace pmvc
