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

#include <string>

#include <gtest/gtest.h>

#include "pmvc/config.h"
#include "pmvc/error.h"
#include "test_util.h"

namespace pmvc {
namespace {

TEST(Config, HelpListsEveryKey) {
  const std::string help = ConfigHelpText();
  ASSERT_GT(ConfigKeys().size(), 40u);
  for (const auto& key : ConfigKeys()) {
    EXPECT_NE(help.find(key.name), std::string::npos) << key.name;
    EXPECT_FALSE(key.help.empty()) << key.name;
  }
}

TEST(Config, DefaultsValidate) {
  const PmvcConfig c;
  EXPECT_NO_THROW(c.Validate());
  EXPECT_EQ(c.loss.alpha, 0.5);
  EXPECT_EQ(c.loss.beta, 0.5);
  EXPECT_EQ(c.rp.rate_low, 0.6);
  EXPECT_EQ(c.rp.rate_high, 2.0);
  EXPECT_EQ(c.model_config().mel_bins, c.frontend.mel_bins);
  EXPECT_EQ(c.model_config().speaker_dim, c.speaker.embedding_dim);
}

TEST(Config, OverridesByType) {
  PmvcConfig c;
  ApplyOverride(c, "model.content_dim=96");
  ApplyOverride(c, "rp.rate_high=1.5");
  ApplyOverride(c, "frames.crop_rule=left_window");
  ApplyOverride(c, "eval.partitions=\"64/192\"");
  ApplyOverride(c, "seed=17");
  EXPECT_EQ(c.model.content_dim, 96);
  EXPECT_EQ(c.rp.rate_high, 1.5);
  EXPECT_EQ(c.crop_rule, "left_window");
  EXPECT_EQ(c.eval.partitions, "64/192");
  EXPECT_EQ(c.seed, 17u);
  EXPECT_EQ(c.train_options().train.seed, 17u);
}

TEST(Config, RejectsBadInput) {
  PmvcConfig c;
  EXPECT_THROW(ApplyOverride(c, "model.nonexistent=1"), ConfigurationError);
  EXPECT_THROW(ApplyOverride(c, "model.content_dim"), ConfigurationError);
  EXPECT_THROW(ApplyOverride(c, "model.content_dim=abc"), ConfigurationError);
  EXPECT_THROW(ApplyOverride(c, "model.content_dim=1.5"), ConfigurationError);
  EXPECT_THROW(ParseConfig("{\"model\": {\"bogus\": 1}}"), ConfigurationError);
  EXPECT_THROW(ParseConfig("[1, 2]"), ConfigurationError);
  ApplyOverride(c, "rp.rate_low=0.4");
  EXPECT_THROW(c.Validate(), ValidationError);
  EXPECT_THROW(LoadConfig(testing::TempDir("cfg_missing") / "none.json"), IoError);
}

TEST(Config, DumpParseRoundTrip) {
  PmvcConfig c;
  ApplyOverride(c, "model.prosody_dim=160");
  ApplyOverride(c, "train.lr_final_fraction=0.25");
  ApplyOverride(c, "loss.sim_delta=0.2");
  const std::string text = DumpConfig(c);
  const PmvcConfig back = ParseConfig(text);
  EXPECT_EQ(DumpConfig(back), text);
  EXPECT_EQ(back.model.prosody_dim, 160);
  const auto path = testing::TempDir("cfg_rt") / "config.json";
  SaveConfig(path, c);
  EXPECT_EQ(DumpConfig(LoadConfig(path)), text);
}

TEST(Config, NestedAndPartialFiles) {
  const PmvcConfig c = ParseConfig(R"({"frontend": {"mel_bins": 40}, "train": {"batch_size": 4}})");
  EXPECT_EQ(c.frontend.mel_bins, 40);
  EXPECT_EQ(c.train.batch_size, 4);
  EXPECT_EQ(c.model.content_dim, PmvcConfig{}.model.content_dim);
  EXPECT_EQ(c.model_config().mel_bins, 40);
}

TEST(Config, DeskConfigLoads) {
  const PmvcConfig c = LoadConfig(PMVC_SOURCE_DIR "/configs/desk.json");
  EXPECT_NO_THROW(c.Validate());
  EXPECT_EQ(c.frontend.mel_bins, 40);
  EXPECT_EQ(c.target_frames, 32);
}

}  // namespace
}  // namespace pmvc
