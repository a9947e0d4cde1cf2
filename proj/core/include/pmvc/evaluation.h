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

#ifndef PMVC_EVALUATION_H_
#define PMVC_EVALUATION_H_

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pmvc/mel.h"
#include "pmvc/model.h"
#include "pmvc/speaker_encoder.h"
#include "pmvc/trainer.h"

namespace pmvc {

inline constexpr int kMcdCoefficients = 13;

// Encodes the source, keeps its content and prosody, decodes with the
// given 1 x d speaker row.
MatrixF ConvertMel(const PmvcModel<float>& model, const MatrixF& source, const MatrixF& speaker);

// Uses the first source utterance; the target speaker embedding averages
// all target utterances.
MelSpectrogram Convert(const std::vector<MelSpectrogram>& source_utts,
                       const std::vector<MelSpectrogram>& target_utts,
                       const PmvcModel<float>& model, const SpeakerEncoder<float>& encoder);

// Cepstra 1..13 of each frame's log-mel amplitude (orthonormal DCT-II of
// half the log power).
MatrixD MelCepstra(const MatrixF& log_mel, int coefficients = kMcdCoefficients);

// Symmetric DTW (steps (1,0), (0,1), (1,1)) over Euclidean cepstral
// distance; returns (10 / ln 10) * sqrt(2) * mean aligned distance.
double Mcd(const MatrixF& reference, const MatrixF& candidate);

// (1 + cos(embed(converted), speaker_embedding(targets))) / 2 in [0, 1].
double DetectionScore(const MatrixF& converted, const std::vector<MelSpectrogram>& target_utts,
                      const SpeakerEncoder<float>& encoder);
double DetectionScore(const MatrixF& converted, const MatrixF& speaker_row,
                      const SpeakerEncoder<float>& encoder);

// mse(C', C) / (mean(C^2) + eps), clipped to [0, 1].
double ProbeError(const MatrixD& predicted, const MatrixD& content);
double ProbeUtterance(const PmvcModel<float>& model, const MatrixF& mel);

struct ProbeSplit {
  std::vector<double> errors;
  double mean = 0.0;
  double stddev = 0.0;
};

struct ProbeReport {
  ProbeSplit seen;
  ProbeSplit unseen;
};

// Evenly spaced selection over items sorted by (speaker, utterance), so the
// result does not depend on input order.
std::vector<TrainingItem> SelectUtterances(std::vector<TrainingItem> items, size_t count);

// Probes n/2 training-speaker and n/2 held-out-speaker utterances.
ProbeReport ProbeContentLeakage(const PmvcModel<float>& model,
                                const std::vector<TrainingItem>& seen_items,
                                const std::vector<TrainingItem>& unseen_items, int n_utts = 30);

// One CSV row per item: speaker,utterance,content_dim,z[0,0],z[0,1],...
void ExportLatents(const PmvcModel<float>& model, const std::vector<TrainingItem>& items,
                   const std::filesystem::path& out_path);

struct ConversionResult {
  std::string source_speaker;
  std::string target_speaker;
  std::string source_utterance;
  double score_target = 0.0;
  double score_source = 0.0;
  double mcd_target = 0.0;  // against the first target reference
};

// Every speaker in `speakers` is converted to each of the others, using
// the speaker's last utterance (sorted) as source and its first
// `reference_utterances` as references.
std::vector<ConversionResult> EvaluateConversions(const PmvcModel<float>& model,
                                                  const SpeakerEncoder<float>& encoder,
                                                  const std::vector<TrainingItem>& items,
                                                  const std::vector<std::string>& speakers,
                                                  int reference_utterances = 10);

struct PartitionResult {
  int content_dim = 0;
  int prosody_dim = 0;
  bool completed = false;
  std::string error;
  double final_recon = 0.0;      // mean recon over the fixed evaluation batch
  double detection_score = 0.0;  // mean over conversion pairs
};

std::vector<std::pair<int, int>> ParsePartitions(const std::string& spec);

// Trains one model per (content, prosody) split with identical seeds and
// budget. Diverged runs are reported with completed = false.
std::vector<PartitionResult> PartitionSweep(const std::vector<TrainingItem>& items,
                                            const SpeakerTable& speakers,
                                            const SpeakerEncoder<float>& encoder,
                                            const TrainOptions& base,
                                            const std::vector<std::pair<int, int>>& partitions,
                                            const std::vector<std::string>& conversion_speakers,
                                            int reference_utterances = 10);

// Fixed evaluation batch: every item once with a Random Prosody seed
// independent of training.
std::vector<PreparedItem> EvaluationBatch(const std::vector<TrainingItem>& items,
                                          const SpeakerTable& speakers, const RPConfig& rp,
                                          uint64_t seed);

}  // namespace pmvc

#endif  // PMVC_EVALUATION_H_
