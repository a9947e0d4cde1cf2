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

#include "pmvc/synthetic.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "pmvc/error.h"
#include "pmvc/rng.h"

namespace pmvc {
namespace {

struct Vowel {
  std::array<double, 3> formants;
};

// Rough adult formant centres (Hz).
constexpr std::array<Vowel, 6> kVowels = {{
    {{730, 1090, 2440}},
    {{270, 2290, 3010}},
    {{300, 870, 2240}},
    {{530, 1840, 2480}},
    {{570, 840, 2410}},
    {{660, 1720, 2410}},
}};
constexpr std::array<double, 3> kFormantGainDb = {30.0, 24.0, 18.0};
constexpr std::array<double, 3> kFormantWidth = {90.0, 110.0, 150.0};

constexpr int kControlStride = 32;  // samples between envelope updates
constexpr double kEdgeSilence = 0.05;

struct Voice {
  double f0 = 120.0;
  double tilt_db_per_octave = -6.0;
  double resonance_hz = 1500.0;
  double resonance_db = 12.0;
  double formant_scale = 1.0;
};

Voice MakeVoice(const SyntheticCorpusConfig& c, int speaker) {
  Rng rng(DeriveSeed(c.seed, HashString("voice"), static_cast<uint64_t>(speaker)));
  Voice v;
  const double position = c.speakers > 1 ? static_cast<double>(speaker) / (c.speakers - 1) : 0.5;
  v.f0 = 90.0 * std::pow(260.0 / 90.0, position) * UniformReal(rng, 0.95, 1.05);
  v.tilt_db_per_octave = UniformReal(rng, -9.0, -3.0);
  v.resonance_hz = UniformReal(rng, 600.0, 0.28 * c.sample_rate);
  v.resonance_db = UniformReal(rng, 8.0, 16.0);
  v.formant_scale = UniformReal(rng, 0.92, 1.08);
  return v;
}

std::vector<int> MakePhrase(const SyntheticCorpusConfig& c, int phrase) {
  Rng rng(DeriveSeed(c.seed, HashString("phrase"), static_cast<uint64_t>(phrase)));
  std::vector<int> vowels;
  for (int i = 0; i < c.vowels_per_phrase; ++i) {
    int v = static_cast<int>(UniformIndex(rng, kVowels.size()));
    if (!vowels.empty() && v == vowels.back()) v = (v + 1) % static_cast<int>(kVowels.size());
    vowels.push_back(v);
  }
  return vowels;
}

double EnvelopeDb(double hz, const std::array<double, 3>& formants, const Voice& voice) {
  double db = voice.tilt_db_per_octave * std::log2(std::max(hz, 50.0) / 100.0);
  for (int i = 0; i < 3; ++i) {
    const double d = (hz - formants[i]) / kFormantWidth[i];
    db += kFormantGainDb[i] * std::exp(-0.5 * d * d);
  }
  const double r = (hz - voice.resonance_hz) / 250.0;
  db += voice.resonance_db * std::exp(-0.5 * r * r);
  return db;
}

}  // namespace

void SyntheticCorpusConfig::Validate() const {
  if (speakers < 1 || utterances_per_speaker < 1) {
    throw ConfigurationError("synthetic corpus needs >= 1 speaker and utterance");
  }
  if (sample_rate < 8000) throw ConfigurationError("synthetic sample_rate must be >= 8000");
  if (phrase_templates < 1 || vowels_per_phrase < 1) {
    throw ConfigurationError("synthetic phrase settings must be >= 1");
  }
  if (!(min_vowel_seconds > 0.0) || max_vowel_seconds < min_vowel_seconds) {
    throw ConfigurationError("synthetic vowel durations must satisfy 0 < min <= max");
  }
  if (!(noise_level >= 0.0)) throw ConfigurationError("synthetic noise_level must be >= 0");
}

SyntheticUtterance SynthesizeUtterance(const SyntheticCorpusConfig& c, int speaker,
                                       int utterance) {
  c.Validate();
  const Voice voice = MakeVoice(c, speaker);
  const int phrase = utterance % c.phrase_templates;
  const std::vector<int> vowels = MakePhrase(c, phrase);
  Rng rng(DeriveSeed(c.seed, static_cast<uint64_t>(speaker) + 1,
                     static_cast<uint64_t>(utterance) + 1));

  const double sr = c.sample_rate;
  std::vector<double> centres;  // vowel centre times (s)
  double t = kEdgeSilence;
  std::vector<double> gains;
  for (size_t i = 0; i < vowels.size(); ++i) {
    const double d = UniformReal(rng, c.min_vowel_seconds, c.max_vowel_seconds);
    centres.push_back(t + 0.5 * d);
    gains.push_back(UniformReal(rng, 0.7, 1.0));
    t += d;
  }
  const double voiced_end = t;
  const double total = t + kEdgeSilence;
  const double slope = UniformReal(rng, -0.2, 0.2);
  const double vibrato_hz = UniformReal(rng, 3.0, 7.0);
  const double vibrato_phase = UniformReal(rng, 0.0, 2.0 * std::numbers::pi);
  const double nyquist_limit = 0.45 * sr;

  const size_t n = static_cast<size_t>(std::ceil(total * sr));
  std::vector<double> wave(n, 0.0);
  std::vector<double> amps;
  double phase = 0.0;
  double f0 = voice.f0;
  for (size_t s = 0; s < n; ++s) {
    const double time = static_cast<double>(s) / sr;
    if (s % kControlStride == 0) {
      const double progress = (time - kEdgeSilence) / (voiced_end - kEdgeSilence);
      f0 = voice.f0 * (1.0 + slope * (progress - 0.5) +
                       0.04 * std::sin(2.0 * std::numbers::pi * vibrato_hz * time + vibrato_phase));
      // Formants glide linearly between neighbouring vowel centres.
      size_t k = 0;
      while (k + 1 < centres.size() && centres[k + 1] <= time) ++k;
      std::array<double, 3> formants;
      double gain;
      if (time <= centres.front() || k + 1 >= centres.size()) {
        const size_t idx = time <= centres.front() ? 0 : centres.size() - 1;
        for (int f = 0; f < 3; ++f) formants[f] = kVowels[vowels[idx]].formants[f];
        gain = gains[idx];
      } else {
        const double w = (time - centres[k]) / (centres[k + 1] - centres[k]);
        for (int f = 0; f < 3; ++f) {
          formants[f] = (1.0 - w) * kVowels[vowels[k]].formants[f] +
                        w * kVowels[vowels[k + 1]].formants[f];
        }
        gain = (1.0 - w) * gains[k] + w * gains[k + 1];
      }
      for (auto& f : formants) f *= voice.formant_scale;
      const double fade_in = std::clamp((time - kEdgeSilence) / 0.02, 0.0, 1.0);
      const double fade_out = std::clamp((voiced_end - time) / 0.02, 0.0, 1.0);
      const double level = gain * fade_in * fade_out;
      amps.clear();
      for (int h = 1; h * f0 < nyquist_limit; ++h) {
        amps.push_back(level * std::pow(10.0, EnvelopeDb(h * f0, formants, voice) / 20.0));
      }
    }
    phase += 2.0 * std::numbers::pi * f0 / sr;
    if (phase > 2.0 * std::numbers::pi) phase -= 2.0 * std::numbers::pi;
    double v = 0.0;
    for (size_t h = 0; h < amps.size(); ++h) v += amps[h] * std::sin((h + 1) * phase);
    wave[s] = v;
  }

  double peak = 0.0;
  for (double v : wave) peak = std::max(peak, std::abs(v));
  const double scale = peak > 0.0 ? 0.6 / peak : 0.0;
  SyntheticUtterance out;
  char name[32];
  std::snprintf(name, sizeof(name), "spk%02d", speaker);
  out.speaker = name;
  std::snprintf(name, sizeof(name), "utt%03d", utterance);
  out.utterance = name;
  out.phrase = phrase;
  out.clip.sample_rate = c.sample_rate;
  out.clip.samples.resize(n);
  for (size_t s = 0; s < n; ++s) {
    const double v = wave[s] * scale + c.noise_level * Gaussian(rng);
    out.clip.samples[s] = static_cast<float>(std::clamp(v, -1.0, 1.0));
  }
  return out;
}

std::vector<std::filesystem::path> WriteSyntheticCorpus(const std::filesystem::path& out_dir,
                                                        const SyntheticCorpusConfig& config) {
  config.Validate();
  std::vector<std::filesystem::path> written;
  for (int s = 0; s < config.speakers; ++s) {
    for (int u = 0; u < config.utterances_per_speaker; ++u) {
      SyntheticUtterance utt = SynthesizeUtterance(config, s, u);
      const auto dir = out_dir / utt.speaker;
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      if (ec) throw IoError("cannot create " + dir.string());
      const auto path = dir / (utt.utterance + ".wav");
      WriteWav(path, utt.clip);
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace pmvc
