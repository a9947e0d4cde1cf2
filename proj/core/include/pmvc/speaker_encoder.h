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

#ifndef PMVC_SPEAKER_ENCODER_H_
#define PMVC_SPEAKER_ENCODER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pmvc/layers.h"
#include "pmvc/mel.h"
#include "pmvc/optimizer.h"

namespace pmvc {

struct SpeakerEncoderConfig {
  int mel_bins = 80;
  int hidden = 256;
  int layers = 2;
  int embedding_dim = 256;

  void Validate() const;
  bool operator==(const SpeakerEncoderConfig&) const = default;
};

// Timbre vector; unit L2 norm when produced by EmbedSpeaker.
struct SpeakerEmbedding {
  Eigen::VectorXf vector;
  std::optional<std::string> speaker_id;

  MatrixF AsRow() const { return vector.transpose(); }
};

// Recurrent speaker encoder: GRU stack over mel frames, final hidden state
// projected to embedding_dim and L2-normalized. Also owns the learnable
// GE2E similarity scale and bias.
template <typename S>
class SpeakerEncoder {
 public:
  static SpeakerEncoder Create(const SpeakerEncoderConfig& config, uint64_t seed);

  const SpeakerEncoderConfig& config() const { return config_; }
  ParameterStore<S>& params() { return params_; }
  const ParameterStore<S>& params() const { return params_; }

  // mel: T x mel_bins -> 1 x embedding_dim, unit norm.
  Var<S> Embed(Tape<S>& tape, Var<S> mel) const;

  // GE2E softmax loss. `embeddings` holds speakers*utterances unit rows,
  // speaker-major (all utterances of speaker 0 first).
  Var<S> Ge2eLoss(Tape<S>& tape, Var<S> embeddings, int speakers, int utterances) const;

  int ge2e_weight() const { return ge2e_weight_; }
  int ge2e_bias() const { return ge2e_bias_; }

  void LoadValues(const std::vector<std::pair<std::string, MatrixF>>& values);

 private:
  SpeakerEncoderConfig config_;
  ParameterStore<S> params_;
  std::vector<GruLayer> rnns_;
  LinearLayer projection_;
  int ge2e_weight_ = -1;
  int ge2e_bias_ = -1;
};

// Embedding of one utterance (no gradient).
Eigen::VectorXf EmbedUtterance(const SpeakerEncoder<float>& encoder, const MatrixF& mel);

// Mean of per-utterance embeddings, re-normalized. Throws ValidationError
// for an empty list.
SpeakerEmbedding EmbedSpeaker(const std::vector<MelSpectrogram>& utterances,
                              const SpeakerEncoder<float>& encoder);

struct LabeledMel {
  std::string speaker;
  MatrixF mel;
};

struct SpeakerPretrainConfig {
  int speakers_per_batch = 4;
  int utterances_per_batch = 5;
  int steps = 2000;
  AdamConfig adam{1e-3, 0.9, 0.99, 1e-9, 3.0};
  uint64_t seed = 0;
  // Called every `log_interval` steps with (step, loss).
  int log_interval = 100;
  std::function<void(int, double)> on_log;
};

// GE2E pretraining over an N x M speaker/utterance batch per step. Requires
// at least two speakers with two utterances each.
SpeakerEncoder<float> PretrainSpeakerEncoder(const std::vector<LabeledMel>& corpus,
                                             const SpeakerEncoderConfig& config,
                                             const SpeakerPretrainConfig& train);

}  // namespace pmvc

#endif  // PMVC_SPEAKER_ENCODER_H_
