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

#ifndef PMVC_MEL_H_
#define PMVC_MEL_H_

#include <cstdint>
#include <filesystem>
#include <string>

#include "pmvc/audio.h"
#include "pmvc/tensor.h"

namespace pmvc {

// STFT / mel analysis settings. Serialized into every checkpoint and
// dataset manifest.
struct FrameParams {
  int sample_rate = kDefaultSampleRate;
  int fft_size = 1024;
  int hop_length = 256;
  int win_length = 1024;
  int mel_bins = 80;
  double fmin = 0.0;
  double fmax = 0.0;  // <= 0 means sample_rate / 2
  double floor_epsilon = 1e-5;

  double EffectiveFmax() const {
    return fmax > 0.0 ? fmax : 0.5 * sample_rate;
  }
  void Validate() const;
  bool operator==(const FrameParams&) const = default;
};

// T x F log-mel matrix.
struct MelSpectrogram {
  MatrixF frames;
  FrameParams params;
  bool log_scaled = true;

  int num_frames() const { return static_cast<int>(frames.rows()); }
  int num_bins() const { return static_cast<int>(frames.cols()); }
};

// Mel scale (Slaney variant: linear below 1 kHz, logarithmic above).
double HzToMel(double hz);
double MelToHz(double mel);

// mel_bins x (fft_size/2 + 1) triangular filterbank with Slaney area
// normalization.
MatrixD MelFilterbank(const FrameParams& params);

// Hann (periodic) analysis window of win_length samples.
std::vector<double> HannWindow(int length);

// Number of frames the analyzer emits for a clip of `num_samples` samples:
// 1 + (num_samples - win_length) / hop_length (no centering pad).
int NumFrames(const FrameParams& params, size_t num_samples);

// log(mel_power + floor_epsilon) per frame. Throws ValidationError when the
// clip is shorter than one window or its rate differs from params.
MelSpectrogram ComputeMel(const AudioClip& clip, const FrameParams& params);

// Griffin-Lim reconstruction through the mel filterbank pseudo-inverse.
// Output length is (T - 1) * hop_length + win_length. Deterministic (phase
// is initialized to zero).
AudioClip InvertMel(const MelSpectrogram& spec, int iterations = 60);

enum class CropRule { kRandomWindow, kLeftWindow };

struct FrameWindowPolicy {
  int target_frames = 256;
  double pad_value = 0.0;  // set from FrameParams via SilencePadValue()
  CropRule crop_rule = CropRule::kRandomWindow;

  void Validate() const;
};

// log(floor_epsilon): the value a silent frame takes.
double SilencePadValue(const FrameParams& params);
FrameWindowPolicy DefaultWindowPolicy(const FrameParams& params,
                                      int target_frames = 256);

CropRule ParseCropRule(const std::string& name);
std::string CropRuleName(CropRule rule);

// Crops (contiguous window) or right-pads to exactly target_frames frames.
MelSpectrogram FitFrames(const MelSpectrogram& spec,
                         const FrameWindowPolicy& policy, uint64_t seed);

// Binary mel container, little endian:
//   char[8] "PMVCMEL1" | u32 rows | u32 cols | u32 sample_rate | u32 fft_size
//   | u32 hop_length | u32 win_length | u32 mel_bins | f64 fmin | f64 fmax
//   | f64 floor_epsilon | u8 log_scaled | f32[rows*cols] row-major values
void WriteMel(const std::filesystem::path& path, const MelSpectrogram& spec);
MelSpectrogram ReadMel(const std::filesystem::path& path);

}  // namespace pmvc

#endif  // PMVC_MEL_H_
