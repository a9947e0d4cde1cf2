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

#include "pmvc/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json_io.h"
#include "pmvc/error.h"

namespace pmvc {
namespace {

using internal::Json;

static_assert(std::endian::native == std::endian::little, "little-endian host required");

constexpr const char* kModelKind = "pmvc";
constexpr const char* kSpeakerKind = "speaker_encoder";

template <typename T>
void Put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T Take(const std::string& in, size_t& pos, const std::filesystem::path& path) {
  if (pos + sizeof(T) > in.size()) throw ValidationError("truncated checkpoint: " + path.string());
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

void WriteContainer(const std::filesystem::path& path, Json header, const NamedTensors& tensors) {
  Json index = Json::array();
  for (const auto& [name, m] : tensors) {
    index.push_back(Json{{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  }
  header["tensors"] = std::move(index);
  const std::string text = header.dump();

  std::string blob(kCheckpointMagic, 8);
  Put<uint32_t>(blob, kCheckpointVersion);
  Put<uint64_t>(blob, text.size());
  blob += text;
  for (const auto& [name, m] : tensors) {
    blob.append(reinterpret_cast<const char*>(m.data()), sizeof(float) * m.size());
  }

  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint: " + tmp.string());
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw IoError("failed writing checkpoint: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place: " + path.string());
}

Json ReadContainer(const std::filesystem::path& path, const char* kind, NamedTensors* tensors) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  const std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (blob.size() < 8 || blob.compare(0, 8, kCheckpointMagic, 8) != 0) {
    throw ValidationError("not a checkpoint file (bad magic): " + path.string());
  }
  size_t pos = 8;
  const uint32_t version = Take<uint32_t>(blob, pos, path);
  if (version != kCheckpointVersion) {
    throw ValidationError("unsupported checkpoint version " + std::to_string(version) +
                          " in " + path.string());
  }
  const uint64_t length = Take<uint64_t>(blob, pos, path);
  if (pos + length > blob.size()) throw ValidationError("truncated checkpoint: " + path.string());
  Json header = internal::ParseJson(blob.substr(pos, length), path.string());
  pos += length;

  const std::string found = internal::Field<std::string>(header, "kind", "checkpoint");
  if (found != kind) {
    throw ValidationError("checkpoint " + path.string() + " holds '" + found + "', expected '" +
                          kind + "'");
  }
  tensors->clear();
  for (const auto& entry : internal::Field<Json>(header, "tensors", "checkpoint")) {
    const auto name = internal::Field<std::string>(entry, "name", "tensor");
    const auto rows = internal::Field<int64_t>(entry, "rows", "tensor");
    const auto cols = internal::Field<int64_t>(entry, "cols", "tensor");
    if (rows < 0 || cols < 0) throw ValidationError("negative tensor shape in " + path.string());
    const size_t bytes = sizeof(float) * static_cast<size_t>(rows * cols);
    if (pos + bytes > blob.size()) throw ValidationError("truncated checkpoint: " + path.string());
    MatrixF m(rows, cols);
    std::memcpy(m.data(), blob.data() + pos, bytes);
    pos += bytes;
    tensors->emplace_back(name, std::move(m));
  }
  if (pos != blob.size()) throw ValidationError("trailing bytes in checkpoint: " + path.string());
  return header;
}

}  // namespace

NamedTensors CollectTensors(const ParameterStore<float>& params) {
  NamedTensors out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p.name, p.value);
  return out;
}

void SaveModelCheckpoint(const std::filesystem::path& path, const PmvcModel<float>& model,
                         const FrameParams& frame_params, int64_t step) {
  Json header{{"kind", kModelKind},
              {"step", step},
              {"model_config", internal::ToJson(model.config())},
              {"frame_params", internal::ToJson(frame_params)}};
  WriteContainer(path, std::move(header), CollectTensors(model.params()));
}

ModelCheckpoint LoadModelCheckpoint(const std::filesystem::path& path) {
  ModelCheckpoint out;
  const Json header = ReadContainer(path, kModelKind, &out.tensors);
  out.step = internal::Field<int64_t>(header, "step", "checkpoint");
  out.model = internal::ModelConfigFromJson(internal::Field<Json>(header, "model_config", "checkpoint"));
  out.frame_params =
      internal::FrameParamsFromJson(internal::Field<Json>(header, "frame_params", "checkpoint"));
  return out;
}

PmvcModel<float> RestoreModel(const ModelCheckpoint& checkpoint) {
  PmvcModel<float> model = PmvcModel<float>::Create(checkpoint.model, 0);
  model.LoadValues(checkpoint.tensors);
  return model;
}

void SaveSpeakerCheckpoint(const std::filesystem::path& path,
                           const SpeakerEncoder<float>& encoder,
                           const FrameParams& frame_params, int64_t step) {
  Json header{{"kind", kSpeakerKind},
              {"step", step},
              {"speaker_config", internal::ToJson(encoder.config())},
              {"frame_params", internal::ToJson(frame_params)}};
  WriteContainer(path, std::move(header), CollectTensors(encoder.params()));
}

SpeakerCheckpoint LoadSpeakerCheckpoint(const std::filesystem::path& path) {
  SpeakerCheckpoint out;
  const Json header = ReadContainer(path, kSpeakerKind, &out.tensors);
  out.step = internal::Field<int64_t>(header, "step", "checkpoint");
  out.config = internal::SpeakerEncoderConfigFromJson(
      internal::Field<Json>(header, "speaker_config", "checkpoint"));
  out.frame_params =
      internal::FrameParamsFromJson(internal::Field<Json>(header, "frame_params", "checkpoint"));
  return out;
}

SpeakerEncoder<float> RestoreSpeakerEncoder(const SpeakerCheckpoint& checkpoint) {
  SpeakerEncoder<float> encoder = SpeakerEncoder<float>::Create(checkpoint.config, 0);
  encoder.LoadValues(checkpoint.tensors);
  return encoder;
}

}  // namespace pmvc
