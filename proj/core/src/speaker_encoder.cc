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

#include "pmvc/speaker_encoder.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "pmvc/error.h"
#include "pmvc/rng.h"

namespace pmvc {
namespace {

constexpr double kNormEps = 1e-8;
constexpr double kGe2eInitWeight = 10.0;
constexpr double kGe2eInitBias = -5.0;
constexpr double kGe2eMinWeight = 1e-6;

}  // namespace

void SpeakerEncoderConfig::Validate() const {
  if (mel_bins < 1 || hidden < 1 || layers < 1 || embedding_dim < 1) {
    throw ConfigurationError("speaker encoder dimensions must be >= 1");
  }
}

template <typename S>
SpeakerEncoder<S> SpeakerEncoder<S>::Create(const SpeakerEncoderConfig& config,
                                            uint64_t seed) {
  config.Validate();
  SpeakerEncoder enc;
  enc.config_ = config;
  Rng rng(seed);
  int in = config.mel_bins;
  for (int i = 0; i < config.layers; ++i) {
    enc.rnns_.push_back(GruLayer::Create(enc.params_, "speaker.rnn" + std::to_string(i),
                                         ParamGroup::kSpeaker, in, config.hidden, rng));
    in = config.hidden;
  }
  enc.projection_ = LinearLayer::Create(enc.params_, "speaker.projection",
                                        ParamGroup::kSpeaker, in, config.embedding_dim, rng);
  enc.ge2e_weight_ = enc.params_.Add("speaker.ge2e.w", ParamGroup::kSpeaker,
                                     MatrixD::Constant(1, 1, kGe2eInitWeight));
  enc.ge2e_bias_ = enc.params_.Add("speaker.ge2e.b", ParamGroup::kSpeaker,
                                   MatrixD::Constant(1, 1, kGe2eInitBias));
  return enc;
}

template <typename S>
Var<S> SpeakerEncoder<S>::Embed(Tape<S>& tape, Var<S> mel) const {
  if (mel.cols() != config_.mel_bins) {
    throw ConfigurationError("speaker encoder expects " + std::to_string(config_.mel_bins) +
                             " mel bins, got " + std::to_string(mel.cols()));
  }
  if (mel.rows() < 1) throw ValidationError("speaker encoder input has no frames");
  Var<S> h = mel;
  for (const auto& rnn : rnns_) h = rnn.Forward(params_, tape, h);
  Var<S> last = ag::SliceRows(h, static_cast<int>(h.rows()) - 1, 1);
  return ag::NormalizeRows(projection_.Forward(params_, tape, last), static_cast<S>(kNormEps));
}

template <typename S>
Var<S> SpeakerEncoder<S>::Ge2eLoss(Tape<S>& tape, Var<S> embeddings, int speakers,
                                   int utterances) const {
  if (speakers < 2 || utterances < 2) {
    throw ValidationError("GE2E needs at least 2 speakers x 2 utterances");
  }
  const int rows = speakers * utterances;
  if (embeddings.rows() != rows) throw ValidationError("GE2E: embedding count mismatch");
  const S eps = static_cast<S>(kNormEps);
  Matrix<S> average = Matrix<S>::Zero(speakers, rows);
  Matrix<S> owner = Matrix<S>::Zero(rows, speakers);
  std::vector<int> labels(rows);
  for (int j = 0; j < speakers; ++j) {
    for (int i = 0; i < utterances; ++i) {
      average(j, j * utterances + i) = S(1) / static_cast<S>(utterances);
      owner(j * utterances + i, j) = S(1);
      labels[j * utterances + i] = j;
    }
  }
  Var<S> centroids = ag::MatMul(tape.Constant(average), embeddings);
  Var<S> unit = ag::NormalizeRows(embeddings, eps);
  Var<S> cross = ag::MatMulNT(unit, ag::NormalizeRows(centroids, eps));
  // Own-speaker centroid excluding the utterance itself.
  Var<S> own = ag::MatMul(tape.Constant(owner), centroids);
  Var<S> exclusive = ag::Scale(
      ag::Sub(ag::Scale(own, static_cast<S>(utterances)), embeddings),
      S(1) / static_cast<S>(utterances - 1));
  Var<S> self_sim = ag::RowDot(unit, ag::NormalizeRows(exclusive, eps));
  Matrix<S> other_mask = Matrix<S>::Ones(rows, speakers) - owner;
  Var<S> similarity = ag::Add(ag::Mul(cross, tape.Constant(other_mask)),
                              ag::Mul(ag::TileCols(self_sim, speakers), tape.Constant(owner)));
  Var<S> logits = ag::AddScalar(ag::MulScalar(similarity, params_.Get(tape, ge2e_weight_)),
                                params_.Get(tape, ge2e_bias_));
  return ag::SoftmaxCrossEntropy(logits, labels);
}

template <typename S>
void SpeakerEncoder<S>::LoadValues(const std::vector<std::pair<std::string, MatrixF>>& values) {
  std::vector<bool> seen(params_.size(), false);
  for (const auto& [name, value] : values) {
    const int index = params_.Find(name);
    if (index < 0) throw ValidationError("tensor '" + name + "' is not a speaker encoder parameter");
    auto& target = params_[index].value;
    if (target.rows() != value.rows() || target.cols() != value.cols()) {
      throw ValidationError("tensor '" + name + "' has the wrong shape");
    }
    target = value.template cast<S>();
    seen[index] = true;
  }
  for (size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw StateError("speaker checkpoint is missing '" + params_[i].name + "'");
  }
}

template class SpeakerEncoder<float>;
template class SpeakerEncoder<double>;

Eigen::VectorXf EmbedUtterance(const SpeakerEncoder<float>& encoder, const MatrixF& mel) {
  Tape<float> tape(false);
  Var<float> e = encoder.Embed(tape, tape.Constant(mel));
  return e.value().row(0).transpose();
}

SpeakerEmbedding EmbedSpeaker(const std::vector<MelSpectrogram>& utterances,
                              const SpeakerEncoder<float>& encoder) {
  if (utterances.empty()) throw ValidationError("embed_speaker needs at least one utterance");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(encoder.config().embedding_dim);
  for (const auto& utt : utterances) {
    sum += EmbedUtterance(encoder, utt.frames).cast<double>();
  }
  sum /= static_cast<double>(utterances.size());
  const double norm = sum.norm();
  SpeakerEmbedding out;
  out.vector = (norm > 0.0 ? Eigen::VectorXd(sum / norm) : sum).cast<float>();
  return out;
}

SpeakerEncoder<float> PretrainSpeakerEncoder(const std::vector<LabeledMel>& corpus,
                                             const SpeakerEncoderConfig& config,
                                             const SpeakerPretrainConfig& train) {
  std::map<std::string, std::vector<const MatrixF*>> by_speaker;
  for (const auto& item : corpus) by_speaker[item.speaker].push_back(&item.mel);
  if (by_speaker.size() < 2) {
    throw ValidationError("speaker encoder pretraining needs at least 2 speakers, got " +
                          std::to_string(by_speaker.size()));
  }
  size_t min_utts = SIZE_MAX;
  for (const auto& [name, utts] : by_speaker) min_utts = std::min(min_utts, utts.size());
  if (min_utts < 2) {
    throw ValidationError("every speaker needs at least 2 utterances for GE2E");
  }
  if (train.steps < 1) throw ValidationError("pretraining steps must be >= 1");
  std::vector<const std::vector<const MatrixF*>*> speakers;
  for (const auto& [name, utts] : by_speaker) speakers.push_back(&utts);

  const int n = std::clamp(train.speakers_per_batch, 2, static_cast<int>(speakers.size()));
  const int m = std::clamp(train.utterances_per_batch, 2, static_cast<int>(min_utts));
  auto encoder = SpeakerEncoder<float>::Create(config, DeriveSeed(train.seed, 1));
  Adam<float> adam(train.adam, encoder.params());
  Rng rng(DeriveSeed(train.seed, 2));
  for (int step = 1; step <= train.steps; ++step) {
    std::vector<size_t> spk_order(speakers.size());
    for (size_t i = 0; i < spk_order.size(); ++i) spk_order[i] = i;
    Tape<float> tape;
    std::vector<Var<float>> rows;
    for (int j = 0; j < n; ++j) {
      const auto pick = j + UniformIndex(rng, spk_order.size() - j);
      std::swap(spk_order[j], spk_order[pick]);
      const auto& utts = *speakers[spk_order[j]];
      std::vector<size_t> utt_order(utts.size());
      for (size_t i = 0; i < utt_order.size(); ++i) utt_order[i] = i;
      for (int i = 0; i < m; ++i) {
        const auto upick = i + UniformIndex(rng, utt_order.size() - i);
        std::swap(utt_order[i], utt_order[upick]);
        rows.push_back(encoder.Embed(tape, tape.Constant(*utts[utt_order[i]])));
      }
    }
    Var<float> loss = encoder.Ge2eLoss(tape, ag::ConcatRows(rows), n, m);
    if (!std::isfinite(loss.scalar())) {
      throw TrainingDivergenceError("ge2e", "speaker encoder loss became non-finite at step " +
                                                std::to_string(step));
    }
    tape.Backward(loss);
    adam.Step(encoder.params(), CollectGrads(tape, encoder.params()));
    auto& w = encoder.params()[encoder.ge2e_weight()].value;
    w(0, 0) = std::max(w(0, 0), static_cast<float>(kGe2eMinWeight));
    if (train.on_log && (step % std::max(1, train.log_interval) == 0 || step == train.steps)) {
      train.on_log(step, loss.scalar());
    }
  }
  return encoder;
}

}  // namespace pmvc
