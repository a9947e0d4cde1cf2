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

#ifndef PMVC_MODEL_H_
#define PMVC_MODEL_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pmvc/autograd.h"
#include "pmvc/layers.h"
#include "pmvc/tensor.h"

namespace pmvc {

struct ModelConfig {
  int mel_bins = 80;
  int content_dim = 128;
  int prosody_dim = 128;
  int speaker_dim = 256;

  int encoder_conv_layers = 3;
  int encoder_channels = 512;
  int encoder_kernel = 5;

  int predictor_recurrent_layers = 2;
  int predictor_hidden = 128;  // per direction
  int predictor_conv_layers = 3;
  int predictor_channels = 128;
  int predictor_kernel = 5;

  int decoder_conv_layers = 3;
  int decoder_channels = 256;
  int decoder_kernel = 5;
  int decoder_recurrent_hidden = 256;

  double grl_lambda = 1.0;
  double in_epsilon = 1e-5;
  double leaky_slope = 0.2;

  int latent_dim() const { return content_dim + prosody_dim; }
  void Validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Encoder output Z (T x D) with its channel partition: content occupies
// columns [0, content_dim), prosody [content_dim, D).
struct LatentFeature {
  MatrixD values;
  int content_dim = 0;
  int prosody_dim = 0;

  MatrixD content() const { return values.leftCols(content_dim); }
  MatrixD prosody() const { return values.rightCols(prosody_dim); }
  void Validate() const;
};

// Plain instance normalization of a T x C feature map (no autograd):
// per column (x - mean) / sqrt(mean squared deviation + eps).
MatrixD InstanceNormalize(const MatrixD& feature_map, double eps);

struct ParameterCount {
  size_t encoder = 0;
  size_t decoder = 0;
  size_t predictor = 0;
  size_t total() const { return encoder + decoder + predictor; }
};

// Layer index tables of PmvcModel; shared by every scalar type.
struct PmvcLayers {
  std::vector<ConvLayer> encoder_convs;
  LinearLayer encoder_projection;
  std::vector<BiGruLayer> predictor_rnns;
  std::vector<ConvLayer> predictor_convs;
  LinearLayer decoder_input;
  std::vector<ConvLayer> decoder_convs;
  std::vector<LinearLayer> adain_scale;
  std::vector<LinearLayer> adain_shift;
  GruLayer decoder_rnn;
  LinearLayer decoder_output;
};

// Feature encoder, content predictor and AdaIN decoder.
//
// Encoder:   [Conv(k) -> IN -> LeakyReLU] x L -> 1x1 projection -> IN = Z,
//            content = Z[:, :content_dim], prosody = Z[:, content_dim:].
// Predictor: GRL -> BiGRU x R -> [Conv -> LeakyReLU] x (K-1) -> Conv to
//            content_dim.
// Decoder:   [C | P | tile(S)] -> 1x1 -> LeakyReLU -> residual blocks of
//            Conv -> IN -> (scale, shift from S) -> LeakyReLU, then a GRU and
//            a linear projection of [h | GRU(h)] to mel bins.
template <typename S>
class PmvcModel {
 public:
  struct Latent {
    Var<S> z;
    Var<S> content;
    Var<S> prosody;
  };

  static PmvcModel Create(const ModelConfig& config, uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParameterStore<S>& params() { return params_; }
  const ParameterStore<S>& params() const { return params_; }

  // mel: T x mel_bins.
  Latent Encode(Tape<S>& tape, Var<S> mel) const;
  // prosody: T x prosody_dim. The input first passes a gradient reversal
  // layer with coefficient `reversal_scale`.
  Var<S> PredictContent(Tape<S>& tape, Var<S> prosody, S reversal_scale) const;
  // speaker: 1 x speaker_dim row.
  Var<S> Decode(Tape<S>& tape, Var<S> content, Var<S> prosody, Var<S> speaker) const;

  ParameterCount CountParameters() const;

  template <typename T>
  PmvcModel<T> Cast() const {
    PmvcModel<T> out;
    out.config_ = config_;
    out.params_ = params_.template Cast<T>();
    out.layers_ = layers_;
    return out;
  }

  // Replaces parameter values by name; every tensor must be present with a
  // matching shape.
  void LoadValues(const std::vector<std::pair<std::string, MatrixF>>& values);

 private:
  template <typename>
  friend class PmvcModel;

  using Layers = PmvcLayers;

  ModelConfig config_;
  ParameterStore<S> params_;
  Layers layers_;
};

// Parameters of the model plus a second encoder of the same structure with
// a final linear layer to prosody_dim (the two-encoder variant), computed
// without building it.
size_t CountTwoEncoderParameters(const ModelConfig& config);
size_t CountEncoderParameters(const ModelConfig& config);

}  // namespace pmvc

#endif  // PMVC_MODEL_H_
