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

#include "pmvc/layers.h"

namespace pmvc {

std::string ParamGroupName(ParamGroup group) {
  switch (group) {
    case ParamGroup::kEncoder:
      return "encoder";
    case ParamGroup::kDecoder:
      return "decoder";
    case ParamGroup::kPredictor:
      return "predictor";
    case ParamGroup::kSpeaker:
      return "speaker";
  }
  return "unknown";
}

MatrixD UniformInit(int rows, int cols, double bound, Rng& rng) {
  MatrixD m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = UniformReal(rng, -bound, bound);
  }
  return m;
}

MatrixD GlorotUniform(int rows, int cols, int fan_in, int fan_out, Rng& rng) {
  return UniformInit(rows, cols, std::sqrt(6.0 / (fan_in + fan_out)), rng);
}

}  // namespace pmvc
