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

#include "json_io.h"

namespace pmvc::internal {

Json ToJson(const FrameParams& p) {
  return Json{{"sample_rate", p.sample_rate}, {"fft_size", p.fft_size},
              {"hop_length", p.hop_length},   {"win_length", p.win_length},
              {"mel_bins", p.mel_bins},       {"fmin", p.fmin},
              {"fmax", p.fmax},               {"floor_epsilon", p.floor_epsilon}};
}

FrameParams FrameParamsFromJson(const Json& j) {
  constexpr const char* kWhere = "frame_params";
  FrameParams p;
  p.sample_rate = Field<int>(j, "sample_rate", kWhere);
  p.fft_size = Field<int>(j, "fft_size", kWhere);
  p.hop_length = Field<int>(j, "hop_length", kWhere);
  p.win_length = Field<int>(j, "win_length", kWhere);
  p.mel_bins = Field<int>(j, "mel_bins", kWhere);
  p.fmin = Field<double>(j, "fmin", kWhere);
  p.fmax = Field<double>(j, "fmax", kWhere);
  p.floor_epsilon = Field<double>(j, "floor_epsilon", kWhere);
  return p;
}

Json ToJson(const ModelConfig& c) {
  return Json{{"mel_bins", c.mel_bins},
              {"content_dim", c.content_dim},
              {"prosody_dim", c.prosody_dim},
              {"speaker_dim", c.speaker_dim},
              {"encoder_conv_layers", c.encoder_conv_layers},
              {"encoder_channels", c.encoder_channels},
              {"encoder_kernel", c.encoder_kernel},
              {"predictor_recurrent_layers", c.predictor_recurrent_layers},
              {"predictor_hidden", c.predictor_hidden},
              {"predictor_conv_layers", c.predictor_conv_layers},
              {"predictor_channels", c.predictor_channels},
              {"predictor_kernel", c.predictor_kernel},
              {"decoder_conv_layers", c.decoder_conv_layers},
              {"decoder_channels", c.decoder_channels},
              {"decoder_kernel", c.decoder_kernel},
              {"decoder_recurrent_hidden", c.decoder_recurrent_hidden},
              {"grl_lambda", c.grl_lambda},
              {"in_epsilon", c.in_epsilon},
              {"leaky_slope", c.leaky_slope}};
}

ModelConfig ModelConfigFromJson(const Json& j) {
  constexpr const char* kWhere = "model_config";
  ModelConfig c;
  c.mel_bins = Field<int>(j, "mel_bins", kWhere);
  c.content_dim = Field<int>(j, "content_dim", kWhere);
  c.prosody_dim = Field<int>(j, "prosody_dim", kWhere);
  c.speaker_dim = Field<int>(j, "speaker_dim", kWhere);
  c.encoder_conv_layers = Field<int>(j, "encoder_conv_layers", kWhere);
  c.encoder_channels = Field<int>(j, "encoder_channels", kWhere);
  c.encoder_kernel = Field<int>(j, "encoder_kernel", kWhere);
  c.predictor_recurrent_layers = Field<int>(j, "predictor_recurrent_layers", kWhere);
  c.predictor_hidden = Field<int>(j, "predictor_hidden", kWhere);
  c.predictor_conv_layers = Field<int>(j, "predictor_conv_layers", kWhere);
  c.predictor_channels = Field<int>(j, "predictor_channels", kWhere);
  c.predictor_kernel = Field<int>(j, "predictor_kernel", kWhere);
  c.decoder_conv_layers = Field<int>(j, "decoder_conv_layers", kWhere);
  c.decoder_channels = Field<int>(j, "decoder_channels", kWhere);
  c.decoder_kernel = Field<int>(j, "decoder_kernel", kWhere);
  c.decoder_recurrent_hidden = Field<int>(j, "decoder_recurrent_hidden", kWhere);
  c.grl_lambda = Field<double>(j, "grl_lambda", kWhere);
  c.in_epsilon = Field<double>(j, "in_epsilon", kWhere);
  c.leaky_slope = Field<double>(j, "leaky_slope", kWhere);
  return c;
}

Json ToJson(const SpeakerEncoderConfig& c) {
  return Json{{"mel_bins", c.mel_bins},
              {"hidden", c.hidden},
              {"layers", c.layers},
              {"embedding_dim", c.embedding_dim}};
}

SpeakerEncoderConfig SpeakerEncoderConfigFromJson(const Json& j) {
  constexpr const char* kWhere = "speaker_config";
  SpeakerEncoderConfig c;
  c.mel_bins = Field<int>(j, "mel_bins", kWhere);
  c.hidden = Field<int>(j, "hidden", kWhere);
  c.layers = Field<int>(j, "layers", kWhere);
  c.embedding_dim = Field<int>(j, "embedding_dim", kWhere);
  return c;
}

Json ParseJson(const std::string& text, const std::string& where) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(where + ": invalid JSON (" + e.what() + ")");
  }
}

}  // namespace pmvc::internal
