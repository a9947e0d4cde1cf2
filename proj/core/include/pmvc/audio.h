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

#ifndef PMVC_AUDIO_H_
#define PMVC_AUDIO_H_

#include <filesystem>
#include <vector>

namespace pmvc {

inline constexpr int kDefaultSampleRate = 22050;

// Mono waveform, amplitudes in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = kDefaultSampleRate;

  size_t size() const { return samples.size(); }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Throws ValidationError if the rate is non-positive or any sample is
// non-finite. Empty clips are rejected only when `require_samples` is set.
void ValidateClip(const AudioClip& clip, bool require_samples = true);

// Reads a RIFF/WAVE file (PCM 8/16/24/32-bit int or 32/64-bit float, any
// channel count, WAVE_FORMAT_EXTENSIBLE accepted). Channels are averaged and
// the result resampled to `target_rate` when it differs from the file rate.
AudioClip LoadAudio(const std::filesystem::path& path,
                    int target_rate = kDefaultSampleRate);

// Decodes an in-memory WAV image without resampling.
AudioClip DecodeWav(const std::vector<char>& bytes);

// Writes 16-bit PCM mono. Samples outside [-1, 1] are clipped.
void WriteWav(const std::filesystem::path& path, const AudioClip& clip);

// Band-limited windowed-sinc resampler (Hann-windowed sinc, 32 zero crossings
// per side, cutoff at 0.95 of the lower Nyquist frequency). Output length is
// ceil(n * to_rate / from_rate).
std::vector<float> Resample(const std::vector<float>& samples, int from_rate,
                            int to_rate);

}  // namespace pmvc

#endif  // PMVC_AUDIO_H_
