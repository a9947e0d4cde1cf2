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

#include "pmvc/audio.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "pmvc/error.h"

namespace pmvc {
namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint16_t ReadU16(const char* p) {
  return static_cast<uint16_t>(static_cast<uint8_t>(p[0]) |
                               (static_cast<uint8_t>(p[1]) << 8));
}

uint32_t ReadU32(const char* p) {
  return static_cast<uint32_t>(static_cast<uint8_t>(p[0])) |
         (static_cast<uint32_t>(static_cast<uint8_t>(p[1])) << 8) |
         (static_cast<uint32_t>(static_cast<uint8_t>(p[2])) << 16) |
         (static_cast<uint32_t>(static_cast<uint8_t>(p[3])) << 24);
}

void PutU16(std::string* out, uint16_t v) {
  out->push_back(static_cast<char>(v & 0xff));
  out->push_back(static_cast<char>((v >> 8) & 0xff));
}

void PutU32(std::string* out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

double DecodeSample(const char* p, uint16_t format, uint16_t bits) {
  if (format == kFormatFloat) {
    if (bits == 32) {
      float f;
      std::memcpy(&f, p, 4);
      return f;
    }
    double d;
    std::memcpy(&d, p, 8);
    return d;
  }
  switch (bits) {
    case 8:
      return (static_cast<double>(static_cast<uint8_t>(p[0])) - 128.0) / 128.0;
    case 16:
      return static_cast<double>(static_cast<int16_t>(ReadU16(p))) / 32768.0;
    case 24: {
      int32_t v = static_cast<int32_t>(static_cast<uint8_t>(p[0])) |
                  (static_cast<int32_t>(static_cast<uint8_t>(p[1])) << 8) |
                  (static_cast<int32_t>(static_cast<int8_t>(p[2])) << 16);
      return static_cast<double>(v) / 8388608.0;
    }
    case 32:
      return static_cast<double>(static_cast<int32_t>(ReadU32(p))) /
             2147483648.0;
    default:
      throw ValidationError("unsupported PCM bit depth " +
                            std::to_string(bits));
  }
}

}  // namespace

void ValidateClip(const AudioClip& clip, bool require_samples) {
  if (clip.sample_rate <= 0) {
    throw ValidationError("sample rate must be positive");
  }
  if (require_samples && clip.samples.empty()) {
    throw ValidationError("audio clip is empty");
  }
  for (float s : clip.samples) {
    if (!std::isfinite(s)) throw ValidationError("audio contains non-finite samples");
  }
}

AudioClip DecodeWav(const std::vector<char>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw ValidationError("not a RIFF/WAVE file");
  }
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const char* data = nullptr;
  size_t data_size = 0;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* chunk = bytes.data() + pos;
    const uint32_t size = ReadU32(chunk + 4);
    const size_t body = pos + 8;
    const size_t available = std::min<size_t>(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (available < 16) throw ValidationError("truncated fmt chunk");
      format = ReadU16(chunk + 8);
      channels = ReadU16(chunk + 10);
      rate = ReadU32(chunk + 12);
      bits = ReadU16(chunk + 22);
      if (format == kFormatExtensible) {
        if (available < 26) throw ValidationError("truncated extensible fmt chunk");
        format = ReadU16(chunk + 8 + 24);
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = available;
    }
    pos = body + size + (size & 1);
  }
  if (channels == 0 || rate == 0) throw ValidationError("missing fmt chunk");
  if (data == nullptr) throw ValidationError("missing data chunk");
  if (format != kFormatPcm && format != kFormatFloat) {
    throw ValidationError("unsupported WAV format tag " + std::to_string(format));
  }
  if (format == kFormatFloat && bits != 32 && bits != 64) {
    throw ValidationError("unsupported float bit depth " + std::to_string(bits));
  }
  const size_t bytes_per_sample = bits / 8;
  const size_t frame_bytes = bytes_per_sample * channels;
  const size_t num_frames = data_size / frame_bytes;
  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(num_frames);
  for (size_t i = 0; i < num_frames; ++i) {
    double acc = 0.0;
    for (uint16_t c = 0; c < channels; ++c) {
      acc += DecodeSample(data + i * frame_bytes + c * bytes_per_sample,
                          format, bits);
    }
    clip.samples[i] = static_cast<float>(acc / channels);
  }
  return clip;
}

AudioClip LoadAudio(const std::filesystem::path& path, int target_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open audio file " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading " + path.string());
  AudioClip clip;
  try {
    clip = DecodeWav(bytes);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  if (clip.samples.empty()) {
    throw ValidationError(path.string() + ": zero-length audio");
  }
  if (target_rate > 0 && clip.sample_rate != target_rate) {
    clip.samples = Resample(clip.samples, clip.sample_rate, target_rate);
    clip.sample_rate = target_rate;
  }
  ValidateClip(clip);
  return clip;
}

void WriteWav(const std::filesystem::path& path, const AudioClip& clip) {
  ValidateClip(clip, false);
  std::string out;
  const uint32_t data_bytes = static_cast<uint32_t>(clip.samples.size() * 2);
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutU32(&out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutU32(&out, 16);
  PutU16(&out, kFormatPcm);
  PutU16(&out, 1);
  PutU32(&out, static_cast<uint32_t>(clip.sample_rate));
  PutU32(&out, static_cast<uint32_t>(clip.sample_rate) * 2);
  PutU16(&out, 2);
  PutU16(&out, 16);
  out += "data";
  PutU32(&out, data_bytes);
  for (float s : clip.samples) {
    const double clipped = std::clamp(static_cast<double>(s), -1.0, 1.0);
    const auto v = static_cast<int16_t>(
        std::clamp(std::lround(clipped * 32767.0), -32768L, 32767L));
    PutU16(&out, static_cast<uint16_t>(v));
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("failed writing " + path.string());
}

std::vector<float> Resample(const std::vector<float>& samples, int from_rate,
                            int to_rate) {
  if (from_rate <= 0 || to_rate <= 0) {
    throw ValidationError("resample rates must be positive");
  }
  if (from_rate == to_rate) return samples;
  constexpr int kZeroCrossings = 32;
  constexpr double kRolloff = 0.95;
  const double step = static_cast<double>(from_rate) / to_rate;
  const double cutoff = kRolloff * std::min(1.0, static_cast<double>(to_rate) / from_rate);
  const double half_width = kZeroCrossings / cutoff;
  const size_t out_len = static_cast<size_t>(
      (static_cast<uint64_t>(samples.size()) * to_rate + from_rate - 1) / from_rate);
  const auto n_in = static_cast<long>(samples.size());
  std::vector<float> out(out_len);
  for (size_t n = 0; n < out_len; ++n) {
    const double center = n * step;
    const long lo = std::max(0L, static_cast<long>(std::ceil(center - half_width)));
    const long hi = std::min(n_in - 1, static_cast<long>(std::floor(center + half_width)));
    double acc = 0.0;
    for (long k = lo; k <= hi; ++k) {
      const double x = k - center;
      const double arg = M_PI * cutoff * x;
      const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
      const double window = 0.5 * (1.0 + std::cos(M_PI * x / half_width));
      acc += samples[k] * cutoff * sinc * window;
    }
    out[n] = static_cast<float>(acc);
  }
  return out;
}

}  // namespace pmvc
