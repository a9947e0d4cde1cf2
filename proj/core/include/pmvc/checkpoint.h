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

#ifndef PMVC_CHECKPOINT_H_
#define PMVC_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pmvc/mel.h"
#include "pmvc/model.h"
#include "pmvc/speaker_encoder.h"

namespace pmvc {

// On-disk layout:
//   8 bytes  magic "PMVCCKPT"
//   u32      format version
//   u64      header length N
//   N bytes  JSON header: kind, configs, frame params, step, tensor index
//   payload  float32 row-major tensors in index order (little endian)
inline constexpr char kCheckpointMagic[] = "PMVCCKPT";
inline constexpr uint32_t kCheckpointVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, MatrixF>>;

struct ModelCheckpoint {
  ModelConfig model;
  FrameParams frame_params;
  int64_t step = 0;
  NamedTensors tensors;
};

struct SpeakerCheckpoint {
  SpeakerEncoderConfig config;
  FrameParams frame_params;
  int64_t step = 0;
  NamedTensors tensors;
};

NamedTensors CollectTensors(const ParameterStore<float>& params);

// Writes through a temporary file and renames, so a crash never leaves a
// truncated checkpoint behind.
void SaveModelCheckpoint(const std::filesystem::path& path, const PmvcModel<float>& model,
                         const FrameParams& frame_params, int64_t step);
ModelCheckpoint LoadModelCheckpoint(const std::filesystem::path& path);
PmvcModel<float> RestoreModel(const ModelCheckpoint& checkpoint);

void SaveSpeakerCheckpoint(const std::filesystem::path& path,
                           const SpeakerEncoder<float>& encoder,
                           const FrameParams& frame_params, int64_t step);
SpeakerCheckpoint LoadSpeakerCheckpoint(const std::filesystem::path& path);
SpeakerEncoder<float> RestoreSpeakerEncoder(const SpeakerCheckpoint& checkpoint);

}  // namespace pmvc

#endif  // PMVC_CHECKPOINT_H_
