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

#ifndef PMVC_TRAINER_H_
#define PMVC_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pmvc/autograd.h"
#include "pmvc/mel.h"
#include "pmvc/model.h"
#include "pmvc/objectives.h"
#include "pmvc/optimizer.h"
#include "pmvc/prosody.h"
#include "pmvc/speaker_encoder.h"

namespace pmvc {

struct TrainConfig {
  int batch_size = 16;
  int64_t total_steps = 20000;
  AdamConfig adam;  // lr 1e-4, betas (0.9, 0.99), eps 1e-9
  // Learning rate falls linearly from adam.learning_rate at step 1 to
  // lr_final_fraction * adam.learning_rate at the last step; 1 keeps it flat.
  double lr_final_fraction = 1.0;
  int64_t log_interval = 100;
  int64_t checkpoint_interval = 1000;
  int speaker_reference_utterances = 10;
  uint64_t seed = 0;

  void Validate() const;
  double LearningRateAt(int64_t step) const;
};

struct TrainingItem {
  std::string speaker;
  std::string utterance;
  MatrixF mel;  // T x F, already fitted to the training window
};

// Speaker id -> 1 x d unit embedding row.
using SpeakerTable = std::map<std::string, MatrixF>;

// Embeds each speaker from its first `reference_utterances` items (sorted
// by utterance id).
SpeakerTable BuildSpeakerTable(const std::vector<TrainingItem>& items,
                               const SpeakerEncoder<float>& encoder,
                               int reference_utterances);
void WriteSpeakerTable(const std::filesystem::path& path, const SpeakerTable& table);
SpeakerTable ReadSpeakerTable(const std::filesystem::path& path);

struct PreparedItem {
  MatrixF x;
  MatrixF x_res;
  MatrixF speaker;
};

// Applies Random Prosody with a seed derived from (seed, salt, index).
PreparedItem PrepareItem(const TrainingItem& item, const SpeakerTable& speakers,
                         const RPConfig& rp, uint64_t seed, uint64_t salt, uint64_t index);

// Samples `batch_size` items uniformly with replacement for `step`.
std::vector<PreparedItem> SampleBatch(const std::vector<TrainingItem>& items,
                                      const SpeakerTable& speakers, const RPConfig& rp,
                                      uint64_t seed, int64_t step, int batch_size);

enum class GradientMode {
  // The objective recon + alpha*sim + adv with the reversal layer scaled by
  // lambda*beta: encoder parameters descend recon + alpha*sim and ascend
  // beta*adv through the prosody path (targets are detached), the predictor
  // descends adv, the decoder descends recon.
  kMinMax,
  // The plain scalar recon + alpha*sim + beta*adv with the reversal layer
  // acting as identity and the adversarial targets attached; used to check
  // gradients of the reported total.
  kPlainTotal,
};

struct LossOptions {
  LossWeights weights;
  double sim_delta = kSimDenominatorFloor;
  GradientMode mode = GradientMode::kMinMax;
};

template <typename S>
struct BatchGraph {
  Var<S> objective;        // mean over items, the scalar to differentiate
  LossBreakdown breakdown;  // mean over items, in double
};

template <typename S>
BatchGraph<S> BuildBatchGraph(const PmvcModel<S>& model, Tape<S>& tape,
                              const std::vector<PreparedItem>& batch, const LossOptions& options);

// Loss values without gradient bookkeeping.
LossBreakdown EvaluateLosses(const PmvcModel<float>& model, const std::vector<PreparedItem>& batch,
                             const LossOptions& options);

struct TrainOptions {
  ModelConfig model;
  TrainConfig train;
  RPConfig rp;
  LossOptions loss;
  FrameParams frame_params;
  // When set, loss.log and checkpoints are written below this directory.
  std::optional<std::filesystem::path> run_dir;
  std::function<void(int64_t, const LossBreakdown&)> on_log;
};

struct TrainResult {
  PmvcModel<float> model;
  std::vector<LossBreakdown> history;  // one entry per step
};

// Runs the min-max training loop. A non-finite loss or gradient raises
// TrainingDivergenceError after saving the pre-update parameters as
// last_good.ckpt in the run directory.
TrainResult Train(const std::vector<TrainingItem>& items, const SpeakerTable& speakers,
                  const TrainOptions& options, const PmvcModel<float>* initial = nullptr);

}  // namespace pmvc

#endif  // PMVC_TRAINER_H_
