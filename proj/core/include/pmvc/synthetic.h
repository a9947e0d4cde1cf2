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

#ifndef PMVC_SYNTHETIC_H_
#define PMVC_SYNTHETIC_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pmvc/audio.h"

namespace pmvc {

// Source-filter speech stand-in. Every speaker has a static spectral
// coloration (tilt, a fixed resonance, formant scaling) and a pitch range;
// utterances share phrase templates (vowel formant sequences) across
// speakers, with random segment durations and pitch contours per utterance.
struct SyntheticCorpusConfig {
  int speakers = 8;
  int utterances_per_speaker = 24;
  int sample_rate = 16000;
  int phrase_templates = 6;
  int vowels_per_phrase = 4;
  double min_vowel_seconds = 0.08;
  double max_vowel_seconds = 0.2;
  double noise_level = 0.003;
  uint64_t seed = 0;

  void Validate() const;
};

struct SyntheticUtterance {
  std::string speaker;
  std::string utterance;
  int phrase = 0;
  AudioClip clip;
};

SyntheticUtterance SynthesizeUtterance(const SyntheticCorpusConfig& config, int speaker,
                                       int utterance);

// Writes <out_dir>/spkNN/uttNNN.wav and returns the list of written files.
std::vector<std::filesystem::path> WriteSyntheticCorpus(const std::filesystem::path& out_dir,
                                                        const SyntheticCorpusConfig& config);

}  // namespace pmvc

#endif  // PMVC_SYNTHETIC_H_
