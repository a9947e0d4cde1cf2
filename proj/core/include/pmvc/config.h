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

#ifndef PMVC_CONFIG_H_
#define PMVC_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pmvc/mel.h"
#include "pmvc/model.h"
#include "pmvc/objectives.h"
#include "pmvc/prosody.h"
#include "pmvc/speaker_encoder.h"
#include "pmvc/trainer.h"

namespace pmvc {

struct SpeakerTrainSettings {
  int speakers_per_batch = 4;
  int utterances_per_batch = 5;
  int steps = 2000;
  double learning_rate = 1e-3;
  double max_grad_norm = 3.0;
};

struct EvalConfig {
  int probe_utterances = 30;
  int conversion_speakers = 4;
  int reference_utterances = 10;
  int export_per_speaker = 100;
  int griffin_lim_iterations = 60;
  std::string partitions = "128/128,96/160,64/192,160/96,192/64";
};

// Everything a run needs, loaded from one JSON file plus key=value
// overrides. Keys are dotted paths such as "model.content_dim"; see
// ConfigKeys() for the full list.
struct PmvcConfig {
  FrameParams frontend;
  int target_frames = 256;
  std::string crop_rule = "random_window";
  RPConfig rp;
  ModelConfig model;  // mel_bins and speaker_dim follow frontend / speaker
  SpeakerEncoderConfig speaker;
  SpeakerTrainSettings speaker_train;
  TrainConfig train;
  LossWeights loss;
  double sim_delta = kSimDenominatorFloor;
  int num_test_speakers = 2;
  EvalConfig eval;
  uint64_t seed = 0;

  void Validate() const;

  FrameWindowPolicy window_policy() const;
  ModelConfig model_config() const;
  SpeakerEncoderConfig speaker_config() const;
  SpeakerPretrainConfig speaker_pretrain() const;
  LossOptions loss_options() const;
  TrainOptions train_options() const;
};

struct ConfigKey {
  std::string name;
  std::string help;
  std::string default_value;  // JSON text
};

const std::vector<ConfigKey>& ConfigKeys();
std::string ConfigHelpText();

PmvcConfig ParseConfig(const std::string& json_text, const std::string& origin = "config");
PmvcConfig LoadConfig(const std::filesystem::path& path);
// "key=value"; the value is read as JSON, falling back to a plain string.
void ApplyOverride(PmvcConfig& config, const std::string& assignment);
std::string DumpConfig(const PmvcConfig& config);
void SaveConfig(const std::filesystem::path& path, const PmvcConfig& config);

}  // namespace pmvc

#endif  // PMVC_CONFIG_H_
