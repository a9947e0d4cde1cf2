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

#include "pmvc/trainer.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <utility>

#include "json_io.h"
#include "pmvc/checkpoint.h"
#include "pmvc/error.h"
#include "pmvc/rng.h"

namespace pmvc {
namespace {

constexpr uint64_t kBatchStream = 0xba7c4;
constexpr uint64_t kProsodyStream = 0x9705d;
constexpr uint64_t kModelStream = 0x30de1;

template <typename S>
bool AllFinite(const std::vector<Matrix<S>>& grads) {
  for (const auto& g : grads) {
    if (g.size() > 0 && !g.allFinite()) return false;
  }
  return true;
}

std::filesystem::path StepCheckpointName(int64_t step) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "step_%08lld.ckpt", static_cast<long long>(step));
  return buf;
}

}  // namespace

void TrainConfig::Validate() const {
  if (batch_size < 1) throw ConfigurationError("train.batch_size must be >= 1");
  if (total_steps < 1) throw ConfigurationError("train.total_steps must be >= 1");
  if (log_interval < 1) throw ConfigurationError("train.log_interval must be >= 1");
  if (checkpoint_interval < 1) throw ConfigurationError("train.checkpoint_interval must be >= 1");
  if (speaker_reference_utterances < 1) {
    throw ConfigurationError("train.speaker_reference_utterances must be >= 1");
  }
  if (!(lr_final_fraction > 0.0) || lr_final_fraction > 1.0) {
    throw ConfigurationError("train.lr_final_fraction must be in (0, 1]");
  }
  adam.Validate();
}

double TrainConfig::LearningRateAt(int64_t step) const {
  if (total_steps <= 1) return adam.learning_rate;
  const double progress = static_cast<double>(step - 1) / static_cast<double>(total_steps - 1);
  return adam.learning_rate * (1.0 - (1.0 - lr_final_fraction) * progress);
}

SpeakerTable BuildSpeakerTable(const std::vector<TrainingItem>& items,
                               const SpeakerEncoder<float>& encoder, int reference_utterances) {
  std::map<std::string, std::vector<const TrainingItem*>> by_speaker;
  for (const auto& item : items) by_speaker[item.speaker].push_back(&item);
  SpeakerTable table;
  for (auto& [speaker, list] : by_speaker) {
    std::sort(list.begin(), list.end(), [](const TrainingItem* a, const TrainingItem* b) {
      return a->utterance < b->utterance;
    });
    const size_t n = std::min<size_t>(list.size(), static_cast<size_t>(reference_utterances));
    std::vector<MelSpectrogram> refs(n);
    for (size_t i = 0; i < n; ++i) refs[i].frames = list[i]->mel;
    table[speaker] = EmbedSpeaker(refs, encoder).AsRow();
  }
  return table;
}

void WriteSpeakerTable(const std::filesystem::path& path, const SpeakerTable& table) {
  internal::Json j = internal::Json::object();
  for (const auto& [speaker, row] : table) {
    j[speaker] = std::vector<float>(row.data(), row.data() + row.size());
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write speaker table: " + path.string());
  out << j.dump(1) << "\n";
}

SpeakerTable ReadSpeakerTable(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read speaker table: " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const internal::Json j = internal::ParseJson(text, path.string());
  SpeakerTable table;
  for (const auto& [speaker, values] : j.items()) {
    const auto v = values.get<std::vector<float>>();
    MatrixF row(1, static_cast<Eigen::Index>(v.size()));
    for (size_t i = 0; i < v.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = v[i];
    table[speaker] = std::move(row);
  }
  return table;
}

PreparedItem PrepareItem(const TrainingItem& item, const SpeakerTable& speakers,
                         const RPConfig& rp, uint64_t seed, uint64_t salt, uint64_t index) {
  auto it = speakers.find(item.speaker);
  if (it == speakers.end()) {
    throw StateError("no speaker embedding for '" + item.speaker + "'");
  }
  MelSpectrogram spec;
  spec.frames = item.mel;
  const uint64_t rp_seed = DeriveSeed(DeriveSeed(seed, kProsodyStream), salt, index);
  AugmentedPair pair = RandomProsody(spec, rp, rp_seed);
  return {item.mel, std::move(pair.augmented.frames), it->second};
}

std::vector<PreparedItem> SampleBatch(const std::vector<TrainingItem>& items,
                                      const SpeakerTable& speakers, const RPConfig& rp,
                                      uint64_t seed, int64_t step, int batch_size) {
  if (items.empty()) throw ValidationError("no training items");
  Rng rng(DeriveSeed(seed, kBatchStream, static_cast<uint64_t>(step)));
  std::vector<PreparedItem> batch;
  batch.reserve(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    const auto& item = items[UniformIndex(rng, items.size())];
    batch.push_back(PrepareItem(item, speakers, rp, seed, static_cast<uint64_t>(step),
                                static_cast<uint64_t>(i)));
  }
  return batch;
}

template <typename S>
BatchGraph<S> BuildBatchGraph(const PmvcModel<S>& model, Tape<S>& tape,
                              const std::vector<PreparedItem>& batch, const LossOptions& options) {
  if (batch.empty()) throw ValidationError("empty batch");
  options.weights.Validate();
  const bool minmax = options.mode == GradientMode::kMinMax;
  const S alpha = static_cast<S>(options.weights.alpha);
  const S beta = static_cast<S>(options.weights.beta);
  const S reversal = minmax ? static_cast<S>(model.config().grl_lambda * options.weights.beta)
                            : static_cast<S>(-1);
  const S adv_weight = minmax ? static_cast<S>(1) : beta;
  const S delta = static_cast<S>(options.sim_delta);

  Var<S> objective;
  double recon_sum = 0.0, sim_sum = 0.0, adv_sum = 0.0;
  for (const auto& item : batch) {
    Var<S> x = tape.Constant(item.x.template cast<S>());
    Var<S> x_res = tape.Constant(item.x_res.template cast<S>());
    Var<S> speaker = tape.Constant(item.speaker.template cast<S>());

    auto zx = model.Encode(tape, x);
    auto zr = model.Encode(tape, x_res);
    Var<S> pred_x = model.PredictContent(tape, zx.prosody, reversal);
    Var<S> pred_r = model.PredictContent(tape, zr.prosody, reversal);
    Var<S> x_hat = model.Decode(tape, zx.content, zx.prosody, speaker);
    Var<S> x_hat_res = model.Decode(tape, zr.content, zr.prosody, speaker);

    Var<S> recon = ag::ReconLoss(x, x_hat, x_res, x_hat_res);
    Var<S> sim = ag::SimLoss(zx.content, zx.prosody, zr.content, zr.prosody, delta);
    Var<S> adv = ag::AdvLoss(pred_x, zx.content, pred_r, zr.content, minmax);
    recon_sum += static_cast<double>(recon.scalar());
    sim_sum += static_cast<double>(sim.scalar());
    adv_sum += static_cast<double>(adv.scalar());

    Var<S> item_objective = ag::Add(ag::Add(recon, ag::Scale(sim, alpha)), ag::Scale(adv, adv_weight));
    objective = objective.valid() ? ag::Add(objective, item_objective) : item_objective;
  }
  const double n = static_cast<double>(batch.size());
  BatchGraph<S> out;
  out.objective = ag::Scale(objective, static_cast<S>(1.0 / n));
  out.breakdown = TotalLoss(recon_sum / n, sim_sum / n, adv_sum / n, options.weights);
  return out;
}

template BatchGraph<float> BuildBatchGraph(const PmvcModel<float>&, Tape<float>&,
                                           const std::vector<PreparedItem>&, const LossOptions&);
template BatchGraph<double> BuildBatchGraph(const PmvcModel<double>&, Tape<double>&,
                                            const std::vector<PreparedItem>&, const LossOptions&);

LossBreakdown EvaluateLosses(const PmvcModel<float>& model, const std::vector<PreparedItem>& batch,
                             const LossOptions& options) {
  Tape<float> tape(false);
  return BuildBatchGraph(model, tape, batch, options).breakdown;
}

TrainResult Train(const std::vector<TrainingItem>& items, const SpeakerTable& speakers,
                  const TrainOptions& options, const PmvcModel<float>* initial) {
  options.train.Validate();
  options.rp.Validate();
  options.model.Validate();
  options.loss.weights.Validate();
  if (items.empty()) throw ValidationError("training set is empty");
  for (const auto& item : items) {
    if (item.mel.cols() != options.model.mel_bins) {
      throw ValidationError("item " + item.speaker + "/" + item.utterance + " has " +
                            std::to_string(item.mel.cols()) + " mel bins, model expects " +
                            std::to_string(options.model.mel_bins));
    }
  }

  const uint64_t seed = options.train.seed;
  TrainResult result{initial != nullptr ? *initial
                                        : PmvcModel<float>::Create(options.model,
                                                                   DeriveSeed(seed, kModelStream)),
                     {}};
  PmvcModel<float>& model = result.model;
  Adam<float> adam(options.train.adam, model.params());

  std::ofstream log;
  std::filesystem::path checkpoint_dir;
  if (options.run_dir) {
    checkpoint_dir = *options.run_dir / "checkpoints";
    std::error_code ec;
    std::filesystem::create_directories(checkpoint_dir, ec);
    if (ec) throw IoError("cannot create " + checkpoint_dir.string());
    log.open(*options.run_dir / "loss.log", std::ios::trunc);
    if (!log) throw IoError("cannot open loss log in " + options.run_dir->string());
  }

  auto diverged = [&](const std::string& component, const std::string& message,
                      int64_t step) -> TrainingDivergenceError {
    if (options.run_dir) {
      SaveModelCheckpoint(*options.run_dir / "last_good.ckpt", model, options.frame_params,
                          step - 1);
    }
    return TrainingDivergenceError(component, message + " at step " + std::to_string(step));
  };

  const int64_t total = options.train.total_steps;
  result.history.reserve(static_cast<size_t>(total));
  for (int64_t step = 1; step <= total; ++step) {
    const auto batch = SampleBatch(items, speakers, options.rp, seed, step,
                                   options.train.batch_size);
    Tape<float> tape;
    BatchGraph<float> graph;
    try {
      graph = BuildBatchGraph(model, tape, batch, options.loss);
    } catch (const TrainingDivergenceError& e) {
      throw diverged(e.component(), e.what(), step);
    }
    tape.Backward(graph.objective);
    const auto grads = CollectGrads(tape, model.params());
    if (!AllFinite(grads)) throw diverged("gradient", "non-finite gradient", step);
    adam.set_learning_rate(options.train.LearningRateAt(step));
    adam.Step(model.params(), grads);
    result.history.push_back(graph.breakdown);

    if (step == 1 || step % options.train.log_interval == 0 || step == total) {
      if (log.is_open()) log << graph.breakdown.ToLogLine(step) << "\n" << std::flush;
      if (options.on_log) options.on_log(step, graph.breakdown);
    }
    if (options.run_dir && (step % options.train.checkpoint_interval == 0 || step == total)) {
      SaveModelCheckpoint(checkpoint_dir / StepCheckpointName(step), model, options.frame_params,
                          step);
      SaveModelCheckpoint(checkpoint_dir / "latest.ckpt", model, options.frame_params, step);
    }
  }
  return result;
}

}  // namespace pmvc
