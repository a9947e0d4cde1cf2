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

#include <cmath>
#include <fstream>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "pmvc/error.h"
#include "pmvc/mel.h"
#include "test_util.h"

namespace pmvc {
namespace {

AudioClip Tone(double hz, int rate, size_t n, double amplitude = 0.5) {
  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    clip.samples[i] = static_cast<float>(amplitude * std::sin(2.0 * std::numbers::pi * hz * i / rate));
  }
  return clip;
}

int RowArgmax(const MatrixF& m, Eigen::Index row) {
  Eigen::Index idx;
  m.row(row).maxCoeff(&idx);
  return static_cast<int>(idx);
}

// Slaney-style mel scale written out independently: linear below 1 kHz,
// logarithmic above.
double OracleMel(double hz) {
  const double f_sp = 200.0 / 3.0;
  const double min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  return hz < min_log_hz ? hz / f_sp : min_log_mel + std::log(hz / min_log_hz) / logstep;
}

double OracleHz(double mel) {
  const double f_sp = 200.0 / 3.0;
  const double min_log_mel = 1000.0 / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  return mel < min_log_mel ? mel * f_sp : 1000.0 * std::exp(logstep * (mel - min_log_mel));
}

// Filter whose area-normalized triangle weighs `hz` the most.
int OracleDominantBin(const FrameParams& p, double hz) {
  const double lo = OracleMel(p.fmin), hi = OracleMel(p.EffectiveFmax());
  std::vector<double> edges(p.mel_bins + 2);
  for (int i = 0; i < p.mel_bins + 2; ++i) edges[i] = OracleHz(lo + (hi - lo) * i / (p.mel_bins + 1));
  int best = -1;
  double best_w = -1.0;
  for (int m = 0; m < p.mel_bins; ++m) {
    const double l = edges[m], c = edges[m + 1], r = edges[m + 2];
    const double w = std::max(0.0, std::min((hz - l) / (c - l), (r - hz) / (r - c))) * 2.0 / (r - l);
    if (w > best_w) {
      best_w = w;
      best = m;
    }
  }
  return best;
}

TEST(MelScale, MatchesSlaneyReferencePoints) {
  EXPECT_NEAR(HzToMel(1000.0), 15.0, 1e-12);
  EXPECT_NEAR(HzToMel(200.0), 3.0, 1e-12);
  for (double hz : {0.0, 440.0, 1000.0, 3000.0, 11025.0}) {
    EXPECT_NEAR(HzToMel(hz), OracleMel(hz), 1e-9);
    EXPECT_NEAR(MelToHz(HzToMel(hz)), hz, 1e-9);
  }
}

TEST(MelSpectrogram, SilenceIsFloor) {
  const FrameParams p;
  AudioClip clip;
  clip.samples.assign(4096, 0.0f);
  const MelSpectrogram mel = ComputeMel(clip, p);
  const float floor = static_cast<float>(std::log(p.floor_epsilon));
  for (Eigen::Index i = 0; i < mel.frames.size(); ++i) EXPECT_EQ(mel.frames.data()[i], floor);
}

TEST(MelSpectrogram, FrameCountFormula) {
  const FrameParams p;
  EXPECT_EQ(ComputeMel(Tone(440, p.sample_rate, p.win_length), p).num_frames(), 1);
  for (size_t n : {1024u, 1279u, 1280u, 22050u}) {
    const int expected = 1 + static_cast<int>((n - p.win_length) / p.hop_length);
    EXPECT_EQ(ComputeMel(Tone(440, p.sample_rate, n), p).num_frames(), expected) << n;
    EXPECT_EQ(NumFrames(p, n), expected);
  }
  EXPECT_THROW(ComputeMel(Tone(440, p.sample_rate, p.win_length - 1), p), ValidationError);
}

TEST(MelSpectrogram, ToneArgmaxMatchesFilterbankLayout) {
  const FrameParams p;
  const MelSpectrogram mel = ComputeMel(Tone(440, p.sample_rate, 22050), p);
  const int expected = OracleDominantBin(p, 440.0);
  for (int t = 0; t < mel.num_frames(); ++t) EXPECT_EQ(RowArgmax(mel.frames, t), expected);
}

TEST(MelSpectrogram, DeterministicAndAboveFloor) {
  const FrameParams p;
  Rng rng(3);
  AudioClip clip;
  for (int i = 0; i < 8000; ++i) clip.samples.push_back(static_cast<float>(0.3 * Gaussian(rng)));
  const MelSpectrogram a = ComputeMel(clip, p);
  const MelSpectrogram b = ComputeMel(clip, p);
  EXPECT_TRUE((a.frames.array() == b.frames.array()).all());
  EXPECT_TRUE(a.frames.allFinite());
  EXPECT_GE(a.frames.minCoeff(), static_cast<float>(std::log(p.floor_epsilon)));
}

TEST(InvertMel, ToneRoundTripKeepsArgmax) {
  const FrameParams p;
  const MelSpectrogram mel = ComputeMel(Tone(440, p.sample_rate, 11025), p);
  const AudioClip audio = InvertMel(mel, 60);
  EXPECT_EQ(audio.size(), static_cast<size_t>((mel.num_frames() - 1) * p.hop_length + p.win_length));
  const MelSpectrogram again = ComputeMel(audio, p);
  ASSERT_EQ(again.num_frames(), mel.num_frames());
  for (int t = 0; t < mel.num_frames(); ++t) {
    EXPECT_LE(std::abs(RowArgmax(again.frames, t) - RowArgmax(mel.frames, t)), 1) << t;
  }
}

TEST(InvertMel, FloorSpectrogramIsNearSilent) {
  FrameParams p;
  MelSpectrogram mel;
  mel.params = p;
  mel.frames = MatrixF::Constant(10, p.mel_bins, static_cast<float>(std::log(p.floor_epsilon)));
  const AudioClip audio = InvertMel(mel, 10);
  double sq = 0.0;
  for (float s : audio.samples) sq += s * s;
  EXPECT_LT(std::sqrt(sq / audio.size()), 1e-3);
}

TEST(InvertMel, SingleFrameGivesOneWindow) {
  FrameParams p;
  MelSpectrogram mel;
  mel.params = p;
  mel.frames = MatrixF::Zero(1, p.mel_bins);
  EXPECT_EQ(InvertMel(mel, 5).size(), static_cast<size_t>(p.win_length));
  EXPECT_THROW(InvertMel(mel, 0), ValidationError);
}

MelSpectrogram IndexedSpec(int frames, int bins) {
  MelSpectrogram m;
  m.params.mel_bins = bins;
  m.frames.resize(frames, bins);
  for (int t = 0; t < frames; ++t) m.frames.row(t).setConstant(static_cast<float>(t));
  return m;
}

TEST(FitFrames, CropSelectsContiguousWindow) {
  const FrameParams p;
  FrameWindowPolicy policy = DefaultWindowPolicy(p, 256);
  const MelSpectrogram in = IndexedSpec(300, 4);
  const MelSpectrogram a = FitFrames(in, policy, 11);
  const MelSpectrogram b = FitFrames(in, policy, 11);
  ASSERT_EQ(a.num_frames(), 256);
  EXPECT_TRUE((a.frames.array() == b.frames.array()).all());
  const float start = a.frames(0, 0);
  for (int t = 0; t < 256; ++t) EXPECT_EQ(a.frames(t, 0), start + t);

  policy.crop_rule = CropRule::kLeftWindow;
  EXPECT_EQ(FitFrames(in, policy, 11).frames(0, 0), 0.0f);
}

TEST(FitFrames, ShortInputIsPaddedWithSilence) {
  const FrameParams p;
  const FrameWindowPolicy policy = DefaultWindowPolicy(p, 256);
  EXPECT_DOUBLE_EQ(policy.pad_value, std::log(p.floor_epsilon));
  const MelSpectrogram out = FitFrames(IndexedSpec(100, 4), policy, 0);
  ASSERT_EQ(out.num_frames(), 256);
  for (int t = 0; t < 100; ++t) EXPECT_EQ(out.frames(t, 0), static_cast<float>(t));
  for (int t = 100; t < 256; ++t) {
    for (int f = 0; f < 4; ++f) EXPECT_EQ(out.frames(t, f), static_cast<float>(policy.pad_value));
  }
}

TEST(FitFrames, IdentityAndIdempotence) {
  const FrameWindowPolicy policy = DefaultWindowPolicy(FrameParams{}, 256);
  const MelSpectrogram in = IndexedSpec(256, 3);
  const MelSpectrogram once = FitFrames(in, policy, 5);
  EXPECT_TRUE((once.frames.array() == in.frames.array()).all());
  const MelSpectrogram cropped = FitFrames(IndexedSpec(400, 3), policy, 5);
  EXPECT_TRUE((FitFrames(cropped, policy, 9).frames.array() == cropped.frames.array()).all());
}

TEST(MelFile, RoundTripIsBitwise) {
  const auto dir = testing::TempDir("mel_file");
  Rng rng(1);
  MelSpectrogram m;
  m.params.sample_rate = 16000;
  m.params.mel_bins = 7;
  m.frames = testing::RandomMatrixF(13, 7, rng);
  WriteMel(dir / "x.mel", m);
  const MelSpectrogram back = ReadMel(dir / "x.mel");
  EXPECT_TRUE(back.params == m.params);
  EXPECT_EQ(back.log_scaled, m.log_scaled);
  EXPECT_TRUE((back.frames.array() == m.frames.array()).all());

  std::ofstream(dir / "bad.mel") << "NOTAMEL!";
  EXPECT_THROW(ReadMel(dir / "bad.mel"), ValidationError);
  EXPECT_THROW(ReadMel(dir / "absent.mel"), IoError);
}

TEST(FrameParams, ValidationRejectsBadSettings) {
  FrameParams p;
  p.hop_length = 0;
  EXPECT_THROW(p.Validate(), ValidationError);
  p = FrameParams{};
  p.win_length = p.fft_size + 1;
  EXPECT_ANY_THROW(p.Validate());
}

}  // namespace
}  // namespace pmvc
