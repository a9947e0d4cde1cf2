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

#include "pmvc/model.h"

#include <string>

#include "pmvc/error.h"

namespace pmvc {
namespace {

void RequirePositive(int v, const char* name) {
  if (v < 1) throw ConfigurationError(std::string("model.") + name + " must be >= 1");
}

size_t ConvCount(int in, int out, int kernel) {
  return static_cast<size_t>(kernel) * in * out + out;
}

size_t LinearCount(int in, int out) { return static_cast<size_t>(in) * out + out; }

}  // namespace

void ModelConfig::Validate() const {
  RequirePositive(mel_bins, "mel_bins");
  RequirePositive(content_dim, "content_dim");
  RequirePositive(prosody_dim, "prosody_dim");
  RequirePositive(speaker_dim, "speaker_dim");
  RequirePositive(encoder_conv_layers, "encoder_conv_layers");
  RequirePositive(encoder_channels, "encoder_channels");
  RequirePositive(predictor_recurrent_layers, "predictor_recurrent_layers");
  RequirePositive(predictor_hidden, "predictor_hidden");
  RequirePositive(predictor_conv_layers, "predictor_conv_layers");
  RequirePositive(predictor_channels, "predictor_channels");
  RequirePositive(decoder_conv_layers, "decoder_conv_layers");
  RequirePositive(decoder_channels, "decoder_channels");
  RequirePositive(decoder_recurrent_hidden, "decoder_recurrent_hidden");
  for (int k : {encoder_kernel, predictor_kernel, decoder_kernel}) {
    if (k < 1 || k % 2 == 0) throw ConfigurationError("model kernel sizes must be odd");
  }
  if (!(grl_lambda > 0.0)) throw ConfigurationError("model.grl_lambda must be > 0");
  if (!(in_epsilon > 0.0)) throw ConfigurationError("model.in_epsilon must be > 0");
  if (!(leaky_slope >= 0.0)) throw ConfigurationError("model.leaky_slope must be >= 0");
}

void LatentFeature::Validate() const {
  if (content_dim < 1 || prosody_dim < 1 || content_dim + prosody_dim != values.cols()) {
    throw ValidationError("latent split " + std::to_string(content_dim) + "/" +
                          std::to_string(prosody_dim) + " does not cover " +
                          std::to_string(values.cols()) + " channels");
  }
}

MatrixD InstanceNormalize(const MatrixD& feature_map, double eps) {
  MatrixD out(feature_map.rows(), feature_map.cols());
  const auto frames = static_cast<double>(feature_map.rows());
  for (Eigen::Index c = 0; c < feature_map.cols(); ++c) {
    double mean = 0.0;
    for (Eigen::Index w = 0; w < feature_map.rows(); ++w) mean += feature_map(w, c);
    mean /= frames;
    double var = 0.0;
    for (Eigen::Index w = 0; w < feature_map.rows(); ++w) {
      const double d = feature_map(w, c) - mean;
      var += d * d;
    }
    const double alpha = std::sqrt(var / frames + eps);
    for (Eigen::Index w = 0; w < feature_map.rows(); ++w) {
      out(w, c) = (feature_map(w, c) - mean) / alpha;
    }
  }
  return out;
}

template <typename S>
PmvcModel<S> PmvcModel<S>::Create(const ModelConfig& config, uint64_t seed) {
  config.Validate();
  PmvcModel model;
  model.config_ = config;
  Rng rng(seed);
  auto& p = model.params_;
  auto& l = model.layers_;
  const ModelConfig& c = config;

  int in = c.mel_bins;
  for (int i = 0; i < c.encoder_conv_layers; ++i) {
    l.encoder_convs.push_back(ConvLayer::Create(p, "encoder.conv" + std::to_string(i),
                                                ParamGroup::kEncoder, in,
                                                c.encoder_channels, c.encoder_kernel, rng));
    in = c.encoder_channels;
  }
  l.encoder_projection = LinearLayer::Create(p, "encoder.projection", ParamGroup::kEncoder,
                                             in, c.latent_dim(), rng);

  in = c.prosody_dim;
  for (int i = 0; i < c.predictor_recurrent_layers; ++i) {
    l.predictor_rnns.push_back(BiGruLayer::Create(p, "predictor.rnn" + std::to_string(i),
                                                  ParamGroup::kPredictor, in,
                                                  c.predictor_hidden, rng));
    in = 2 * c.predictor_hidden;
  }
  for (int i = 0; i < c.predictor_conv_layers; ++i) {
    const int out = i + 1 == c.predictor_conv_layers ? c.content_dim : c.predictor_channels;
    l.predictor_convs.push_back(ConvLayer::Create(p, "predictor.conv" + std::to_string(i),
                                                  ParamGroup::kPredictor, in, out,
                                                  c.predictor_kernel, rng));
    in = out;
  }

  l.decoder_input = LinearLayer::Create(p, "decoder.input", ParamGroup::kDecoder,
                                        c.latent_dim() + c.speaker_dim,
                                        c.decoder_channels, rng);
  for (int i = 0; i < c.decoder_conv_layers; ++i) {
    const std::string name = "decoder.block" + std::to_string(i);
    l.decoder_convs.push_back(ConvLayer::Create(p, name + ".conv", ParamGroup::kDecoder,
                                                c.decoder_channels, c.decoder_channels,
                                                c.decoder_kernel, rng));
    l.adain_scale.push_back(LinearLayer::Create(p, name + ".scale", ParamGroup::kDecoder,
                                                c.speaker_dim, c.decoder_channels, rng, 1.0));
    l.adain_shift.push_back(LinearLayer::Create(p, name + ".shift", ParamGroup::kDecoder,
                                                c.speaker_dim, c.decoder_channels, rng));
  }
  l.decoder_rnn = GruLayer::Create(p, "decoder.rnn", ParamGroup::kDecoder,
                                   c.decoder_channels, c.decoder_recurrent_hidden, rng);
  l.decoder_output = LinearLayer::Create(p, "decoder.output", ParamGroup::kDecoder,
                                         c.decoder_channels + c.decoder_recurrent_hidden,
                                         c.mel_bins, rng);
  return model;
}

template <typename S>
typename PmvcModel<S>::Latent PmvcModel<S>::Encode(Tape<S>& tape, Var<S> mel) const {
  if (mel.cols() != config_.mel_bins) {
    throw ConfigurationError("encoder expects " + std::to_string(config_.mel_bins) +
                             " mel bins, got " + std::to_string(mel.cols()));
  }
  const S eps = static_cast<S>(config_.in_epsilon);
  const S slope = static_cast<S>(config_.leaky_slope);
  Var<S> h = mel;
  for (const auto& conv : layers_.encoder_convs) {
    h = ag::LeakyRelu(ag::InstanceNorm(conv.Forward(params_, tape, h), eps), slope);
  }
  Latent latent;
  latent.z = ag::InstanceNorm(layers_.encoder_projection.Forward(params_, tape, h), eps);
  latent.content = ag::SliceCols(latent.z, 0, config_.content_dim);
  latent.prosody = ag::SliceCols(latent.z, config_.content_dim, config_.prosody_dim);
  return latent;
}

template <typename S>
Var<S> PmvcModel<S>::PredictContent(Tape<S>& tape, Var<S> prosody, S reversal_scale) const {
  if (prosody.cols() != config_.prosody_dim) {
    throw ConfigurationError("content predictor expects " +
                             std::to_string(config_.prosody_dim) +
                             " prosody channels, got " + std::to_string(prosody.cols()));
  }
  const S slope = static_cast<S>(config_.leaky_slope);
  Var<S> h = ag::GradientReversal(prosody, reversal_scale);
  for (const auto& rnn : layers_.predictor_rnns) h = rnn.Forward(params_, tape, h);
  for (size_t i = 0; i < layers_.predictor_convs.size(); ++i) {
    h = layers_.predictor_convs[i].Forward(params_, tape, h);
    if (i + 1 < layers_.predictor_convs.size()) h = ag::LeakyRelu(h, slope);
  }
  return h;
}

template <typename S>
Var<S> PmvcModel<S>::Decode(Tape<S>& tape, Var<S> content, Var<S> prosody,
                            Var<S> speaker) const {
  if (content.rows() != prosody.rows()) {
    throw ValidationError("decoder inputs disagree on frame count (" +
                          std::to_string(content.rows()) + " vs " +
                          std::to_string(prosody.rows()) + ")");
  }
  if (content.cols() != config_.content_dim || prosody.cols() != config_.prosody_dim) {
    throw ConfigurationError("decoder latent dims do not match the model config");
  }
  if (speaker.rows() != 1 || speaker.cols() != config_.speaker_dim) {
    throw ConfigurationError("decoder expects a 1 x " + std::to_string(config_.speaker_dim) +
                             " speaker embedding");
  }
  const S eps = static_cast<S>(config_.in_epsilon);
  const S slope = static_cast<S>(config_.leaky_slope);
  const int frames = static_cast<int>(content.rows());
  Var<S> tiled = ag::TileRows(speaker, frames);
  Var<S> h = ag::LeakyRelu(
      layers_.decoder_input.Forward(params_, tape, ag::ConcatCols<S>({content, prosody, tiled})),
      slope);
  for (size_t i = 0; i < layers_.decoder_convs.size(); ++i) {
    Var<S> y = ag::InstanceNorm(layers_.decoder_convs[i].Forward(params_, tape, h), eps);
    y = ag::MulRow(y, layers_.adain_scale[i].Forward(params_, tape, speaker));
    y = ag::AddRow(y, layers_.adain_shift[i].Forward(params_, tape, speaker));
    h = ag::Add(h, ag::LeakyRelu(y, slope));
  }
  Var<S> r = layers_.decoder_rnn.Forward(params_, tape, h);
  return layers_.decoder_output.Forward(params_, tape, ag::ConcatCols<S>({h, r}));
}

template <typename S>
ParameterCount PmvcModel<S>::CountParameters() const {
  ParameterCount count;
  count.encoder = params_.NumElements(ParamGroup::kEncoder);
  count.decoder = params_.NumElements(ParamGroup::kDecoder);
  count.predictor = params_.NumElements(ParamGroup::kPredictor);
  return count;
}

template <typename S>
void PmvcModel<S>::LoadValues(const std::vector<std::pair<std::string, MatrixF>>& values) {
  std::vector<bool> seen(params_.size(), false);
  for (const auto& [name, value] : values) {
    const int index = params_.Find(name);
    if (index < 0) throw ValidationError("checkpoint tensor '" + name + "' is not a model parameter");
    auto& target = params_[index].value;
    if (target.rows() != value.rows() || target.cols() != value.cols()) {
      throw ValidationError("checkpoint tensor '" + name + "' has the wrong shape");
    }
    target = value.template cast<S>();
    seen[index] = true;
  }
  for (size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw StateError("checkpoint is missing parameter '" + params_[i].name + "'");
  }
}

size_t CountEncoderParameters(const ModelConfig& c) {
  size_t n = 0;
  int in = c.mel_bins;
  for (int i = 0; i < c.encoder_conv_layers; ++i) {
    n += ConvCount(in, c.encoder_channels, c.encoder_kernel);
    in = c.encoder_channels;
  }
  return n + LinearCount(in, c.latent_dim());
}

size_t CountTwoEncoderParameters(const ModelConfig& c) {
  const auto base = PmvcModel<float>::Create(c, 0).CountParameters().total();
  return base + CountEncoderParameters(c) + LinearCount(c.latent_dim(), c.prosody_dim);
}

template class PmvcModel<float>;
template class PmvcModel<double>;

}  // namespace pmvc
