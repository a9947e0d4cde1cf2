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

#ifndef PMVC_DATASET_H_
#define PMVC_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pmvc/mel.h"
#include "pmvc/trainer.h"

namespace pmvc {

struct ManifestEntry {
  std::string speaker;
  std::string utterance;
  std::string path;  // mel file, relative to the manifest directory
  int frames = 0;
};

struct SkippedFile {
  std::string path;  // relative to the corpus directory
  std::string reason;
};

struct DatasetManifest {
  FrameParams frame_params;
  FrameWindowPolicy policy;
  uint64_t seed = 0;
  std::vector<ManifestEntry> entries;
  std::vector<std::string> train_speakers;
  std::vector<std::string> test_speakers;
  std::vector<SkippedFile> skipped;
  std::filesystem::path root;  // directory holding manifest.json; not serialized

  bool IsTrainSpeaker(const std::string& speaker) const;
};

struct PrepareOptions {
  FrameParams frame_params;
  FrameWindowPolicy policy;
  // Held-out speakers, taken from the end of the sorted speaker list. At
  // least two speakers always stay in the training split.
  int num_test_speakers = 2;
  uint64_t seed = 0;
};

inline constexpr char kManifestFileName[] = "manifest.json";

// Reads corpus_dir/<speaker>/*.wav, writes fitted mels to
// out_dir/mels/<speaker>/<utterance>.mel and out_dir/manifest.json.
// Unreadable files are skipped and listed; an empty corpus is an error.
DatasetManifest PrepareDataset(const std::filesystem::path& corpus_dir,
                               const std::filesystem::path& out_dir,
                               const PrepareOptions& options);

void WriteManifest(const std::filesystem::path& path, const DatasetManifest& manifest);
// Accepts either the manifest file or the directory containing it.
DatasetManifest ReadManifest(const std::filesystem::path& path);

enum class Split { kTrain, kTest, kAll };

std::vector<TrainingItem> LoadItems(const DatasetManifest& manifest, Split split);

}  // namespace pmvc

#endif  // PMVC_DATASET_H_
