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

#include "pmvc/dataset.h"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>

#include "json_io.h"
#include "pmvc/error.h"
#include "pmvc/rng.h"

namespace pmvc {
namespace {

namespace fs = std::filesystem;
using internal::Field;
using internal::Json;

bool IsWav(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".wav";
}

std::vector<fs::path> SortedChildren(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (directories ? e.is_directory() : (e.is_regular_file() && IsWav(e.path()))) {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

bool DatasetManifest::IsTrainSpeaker(const std::string& speaker) const {
  return std::find(train_speakers.begin(), train_speakers.end(), speaker) != train_speakers.end();
}

DatasetManifest PrepareDataset(const fs::path& corpus_dir, const fs::path& out_dir,
                               const PrepareOptions& options) {
  options.frame_params.Validate();
  options.policy.Validate();
  if (!fs::is_directory(corpus_dir)) throw IoError("corpus directory not found: " + corpus_dir.string());

  DatasetManifest manifest;
  manifest.frame_params = options.frame_params;
  manifest.policy = options.policy;
  manifest.seed = options.seed;
  manifest.root = out_dir;

  std::vector<std::string> speakers;
  for (const auto& speaker_dir : SortedChildren(corpus_dir, true)) {
    const std::string speaker = speaker_dir.filename().string();
    bool any = false;
    for (const auto& wav : SortedChildren(speaker_dir, false)) {
      const std::string utterance = wav.stem().string();
      const std::string rel_in = speaker + "/" + wav.filename().string();
      MelSpectrogram mel;
      try {
        const AudioClip clip = LoadAudio(wav, options.frame_params.sample_rate);
        mel = ComputeMel(clip, options.frame_params);
      } catch (const Error& e) {
        manifest.skipped.push_back({rel_in, e.what()});
        continue;
      }
      const uint64_t seed = DeriveSeed(options.seed, HashString(speaker), HashString(utterance));
      const MelSpectrogram fitted = FitFrames(mel, options.policy, seed);
      const std::string rel_out = "mels/" + speaker + "/" + utterance + ".mel";
      fs::create_directories(out_dir / "mels" / speaker);
      WriteMel(out_dir / rel_out, fitted);
      manifest.entries.push_back({speaker, utterance, rel_out, fitted.num_frames()});
      any = true;
    }
    if (any) speakers.push_back(speaker);
  }
  if (manifest.entries.empty()) {
    throw ValidationError("empty corpus: no readable WAV files under " + corpus_dir.string());
  }

  const int held_out = std::clamp(options.num_test_speakers, 0,
                                  std::max(0, static_cast<int>(speakers.size()) - 2));
  const size_t split = speakers.size() - static_cast<size_t>(held_out);
  manifest.train_speakers.assign(speakers.begin(), speakers.begin() + split);
  manifest.test_speakers.assign(speakers.begin() + split, speakers.end());

  WriteManifest(out_dir / kManifestFileName, manifest);
  return manifest;
}

void WriteManifest(const fs::path& path, const DatasetManifest& manifest) {
  Json entries = Json::array();
  for (const auto& e : manifest.entries) {
    entries.push_back(Json{{"speaker", e.speaker},
                           {"utterance", e.utterance},
                           {"path", e.path},
                           {"frames", e.frames}});
  }
  Json skipped = Json::array();
  for (const auto& s : manifest.skipped) {
    skipped.push_back(Json{{"path", s.path}, {"reason", s.reason}});
  }
  Json j{{"format", "pmvc-manifest-1"},
         {"frame_params", internal::ToJson(manifest.frame_params)},
         {"policy",
          Json{{"target_frames", manifest.policy.target_frames},
               {"pad_value", manifest.policy.pad_value},
               {"crop_rule", CropRuleName(manifest.policy.crop_rule)}}},
         {"seed", manifest.seed},
         {"train_speakers", manifest.train_speakers},
         {"test_speakers", manifest.test_speakers},
         {"skipped_count", manifest.skipped.size()},
         {"skipped", std::move(skipped)},
         {"entries", std::move(entries)}};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  out << j.dump(1) << "\n";
  if (!out) throw IoError("failed writing manifest: " + path.string());
}

DatasetManifest ReadManifest(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / kManifestFileName : path;
  std::ifstream in(file);
  if (!in) throw IoError("cannot read manifest: " + file.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const Json j = internal::ParseJson(text, file.string());
  constexpr const char* kWhere = "manifest";
  if (Field<std::string>(j, "format", kWhere) != "pmvc-manifest-1") {
    throw ValidationError("unsupported manifest format in " + file.string());
  }
  DatasetManifest m;
  m.root = file.parent_path();
  m.frame_params = internal::FrameParamsFromJson(Field<Json>(j, "frame_params", kWhere));
  const Json policy = Field<Json>(j, "policy", kWhere);
  m.policy.target_frames = Field<int>(policy, "target_frames", kWhere);
  m.policy.pad_value = Field<double>(policy, "pad_value", kWhere);
  m.policy.crop_rule = ParseCropRule(Field<std::string>(policy, "crop_rule", kWhere));
  m.seed = Field<uint64_t>(j, "seed", kWhere);
  m.train_speakers = Field<std::vector<std::string>>(j, "train_speakers", kWhere);
  m.test_speakers = Field<std::vector<std::string>>(j, "test_speakers", kWhere);
  for (const auto& s : Field<Json>(j, "skipped", kWhere)) {
    m.skipped.push_back({Field<std::string>(s, "path", kWhere), Field<std::string>(s, "reason", kWhere)});
  }
  for (const auto& e : Field<Json>(j, "entries", kWhere)) {
    ManifestEntry entry{Field<std::string>(e, "speaker", kWhere),
                        Field<std::string>(e, "utterance", kWhere),
                        Field<std::string>(e, "path", kWhere), Field<int>(e, "frames", kWhere)};
    if (!fs::is_regular_file(m.root / entry.path)) {
      throw ValidationError("manifest references missing file: " + (m.root / entry.path).string());
    }
    m.entries.push_back(std::move(entry));
  }
  std::set<std::string> train(m.train_speakers.begin(), m.train_speakers.end());
  for (const auto& s : m.test_speakers) {
    if (train.count(s) != 0) throw ValidationError("speaker '" + s + "' is in both splits");
  }
  return m;
}

std::vector<TrainingItem> LoadItems(const DatasetManifest& manifest, Split split) {
  std::vector<TrainingItem> items;
  for (const auto& e : manifest.entries) {
    const bool train = manifest.IsTrainSpeaker(e.speaker);
    if ((split == Split::kTrain && !train) || (split == Split::kTest && train)) continue;
    MelSpectrogram mel = ReadMel(manifest.root / e.path);
    if (!(mel.params == manifest.frame_params)) {
      throw ValidationError("mel " + e.path + " was computed with different frame parameters");
    }
    items.push_back({e.speaker, e.utterance, std::move(mel.frames)});
  }
  return items;
}

}  // namespace pmvc
