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

#include "pmvc/prosody.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "pmvc/error.h"
#include "pmvc/rng.h"

namespace pmvc {

void RPConfig::Validate() const {
  if (split_length < 1) throw ValidationError("rp split length must be >= 1");
  if (!(rate_low > 0.5)) {
    throw ValidationError("rp rate_low must exceed 0.5 so the partner rate is defined");
  }
  if (!(rate_low <= rate_high) || !std::isfinite(rate_high)) {
    throw ValidationError("rp rate_low must not exceed rate_high");
  }
}

double PartnerRate(double a) {
  if (!(a > 0.5) || !std::isfinite(a)) {
    throw DomainError("partner rate requires a > 0.5, got " + std::to_string(a));
  }
  return a / (2.0 * a - 1.0);
}

std::pair<int, int> PairLengths(int split_length, double a) {
  const int total = 2 * split_length;
  const long rounded = std::lround(split_length / a);
  const int first = static_cast<int>(std::clamp<long>(rounded, 1, total - 1));
  return {first, total - first};
}

MatrixF StretchSegment(const MatrixF& segment, int new_length) {
  if (segment.rows() == 0) throw ValidationError("cannot stretch an empty segment");
  if (new_length < 1) throw ValidationError("stretch length must be >= 1");
  const auto old_length = static_cast<int>(segment.rows());
  if (new_length == old_length) return segment;
  MatrixF out(new_length, segment.cols());
  if (new_length == 1 || old_length == 1) {
    for (int k = 0; k < new_length; ++k) out.row(k) = segment.row(0);
    return out;
  }
  for (int k = 0; k < new_length; ++k) {
    // Exact rational position k * (old - 1) / (new - 1).
    const long num = static_cast<long>(k) * (old_length - 1);
    const long den = new_length - 1;
    const long base = num / den;
    const long rem = num % den;
    if (rem == 0) {
      out.row(k) = segment.row(base);
    } else {
      const float frac = static_cast<float>(static_cast<double>(rem) / den);
      out.row(k) = segment.row(base) * (1.0f - frac) + segment.row(base + 1) * frac;
    }
  }
  return out;
}

AugmentedPair RandomProsody(const MelSpectrogram& spec, const RPConfig& cfg,
                            uint64_t seed, ProsodyTrace* trace) {
  cfg.Validate();
  const int frames = spec.num_frames();
  const int t = cfg.split_length;
  if (frames < t) {
    throw ValidationError("spectrogram has " + std::to_string(frames) +
                          " frames, fewer than the split length " +
                          std::to_string(t));
  }
  const int num = frames / t;
  std::vector<int> lengths(num, t);
  std::vector<int> remaining(num);
  for (int i = 0; i < num; ++i) remaining[i] = i;

  Rng rng(seed);
  if (trace != nullptr) trace->pairs.clear();
  while (remaining.size() > 1) {
    const auto pick_i = UniformIndex(rng, remaining.size());
    const int seg_i = remaining[pick_i];
    remaining[pick_i] = remaining.back();
    remaining.pop_back();
    const auto pick_j = UniformIndex(rng, remaining.size());
    const int seg_j = remaining[pick_j];
    remaining[pick_j] = remaining.back();
    remaining.pop_back();

    const double a = UniformReal(rng, cfg.rate_low, cfg.rate_high);
    const auto [len_i, len_j] = PairLengths(t, a);
    lengths[seg_i] = len_i;
    lengths[seg_j] = len_j;
    if (trace != nullptr) trace->pairs.push_back({seg_i, seg_j, a, len_i, len_j});
  }

  AugmentedPair pair;
  pair.seed = seed;
  pair.original = spec;
  pair.augmented.params = spec.params;
  pair.augmented.log_scaled = spec.log_scaled;
  pair.augmented.frames.resize(frames, spec.num_bins());
  int cursor = 0;
  for (int s = 0; s < num; ++s) {
    const MatrixF segment = spec.frames.middleRows(s * t, t);
    pair.augmented.frames.middleRows(cursor, lengths[s]) =
        StretchSegment(segment, lengths[s]);
    cursor += lengths[s];
  }
  const int remainder = frames - num * t;
  if (remainder > 0) {
    pair.augmented.frames.bottomRows(remainder) = spec.frames.bottomRows(remainder);
  }
  if (trace != nullptr) {
    trace->segment_lengths = lengths;
    if (remainder > 0) trace->segment_lengths.push_back(remainder);
  }
  return pair;
}

}  // namespace pmvc
