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

#ifndef PMVC_PROSODY_H_
#define PMVC_PROSODY_H_

#include <cstdint>
#include <utility>
#include <vector>

#include "pmvc/mel.h"

namespace pmvc {

// Random prosody augmentation settings.
struct RPConfig {
  int split_length = 2;  // frames per segment
  double rate_low = 0.6;
  double rate_high = 2.0;

  void Validate() const;
};

// One pair draw: `rate` stretches the first segment, `partner` the second.
struct RateDraw {
  double rate = 1.0;
  double partner = 1.0;
};

struct AugmentedPair {
  MelSpectrogram original;
  MelSpectrogram augmented;
  uint64_t seed = 0;
};

// Which segments were paired and the integer lengths they received; useful
// for inspecting an augmentation.
struct ProsodyTrace {
  struct Pair {
    int first = 0;
    int second = 0;
    double rate = 1.0;
    int first_length = 0;
    int second_length = 0;
  };
  std::vector<Pair> pairs;
  std::vector<int> segment_lengths;  // output length of each segment, in order
};

// a / (2a - 1). Throws DomainError for a <= 0.5.
double PartnerRate(double a);

// Target frame counts for a pair stretched at rate `a` (tempo factor: the
// new duration is t / a). The first length is round(t / a) clamped to
// [1, 2t - 1]; the second is 2t minus the first.
std::pair<int, int> PairLengths(int split_length, double a);

// Linear interpolation along time with endpoints preserved. For
// new_length == 1 the first frame is returned.
MatrixF StretchSegment(const MatrixF& segment, int new_length);

// Splits `spec` into floor(T / t) segments (plus an unmodified trailing
// remainder), stretches uniformly drawn pairs with reciprocal-duration rates
// and concatenates in the original order. augmented.T == spec.T always.
AugmentedPair RandomProsody(const MelSpectrogram& spec, const RPConfig& cfg,
                            uint64_t seed, ProsodyTrace* trace = nullptr);

}  // namespace pmvc

#endif  // PMVC_PROSODY_H_
