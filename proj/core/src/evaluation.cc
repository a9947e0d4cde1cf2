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

#include "pmvc/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <tuple>

#include "pmvc/error.h"
#include "pmvc/rng.h"

namespace pmvc {
namespace {

constexpr uint64_t kEvalProsodySalt = 0xe7a1;

std::vector<MelSpectrogram> AsSpectrograms(const std::vector<const TrainingItem*>& items,
                                           size_t count) {
  std::vector<MelSpectrogram> out;
  for (size_t i = 0; i < std::min(count, items.size()); ++i) {
    MelSpectrogram m;
    m.frames = items[i]->mel;
    out.push_back(std::move(m));
  }
  return out;
}

ProbeSplit Summarize(std::vector<double> errors) {
  ProbeSplit s;
  s.errors = std::move(errors);
  if (s.errors.empty()) return s;
  double sum = 0.0;
  for (double e : s.errors) sum += e;
  s.mean = sum / static_cast<double>(s.errors.size());
  double sq = 0.0;
  for (double e : s.errors) sq += (e - s.mean) * (e - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(s.errors.size()));
  return s;
}

}  // namespace

MatrixF ConvertMel(const PmvcModel<float>& model, const MatrixF& source, const MatrixF& speaker) {
  if (source.cols() != model.config().mel_bins) {
    throw ValidationError("source has " + std::to_string(source.cols()) + " mel bins, model expects " +
                          std::to_string(model.config().mel_bins));
  }
  Tape<float> tape(false);
  auto z = model.Encode(tape, tape.Constant(source));
  return model.Decode(tape, z.content, z.prosody, tape.Constant(speaker)).value();
}

MelSpectrogram Convert(const std::vector<MelSpectrogram>& source_utts,
                       const std::vector<MelSpectrogram>& target_utts,
                       const PmvcModel<float>& model, const SpeakerEncoder<float>& encoder) {
  if (source_utts.empty()) throw ValidationError("convert needs at least one source utterance");
  const SpeakerEmbedding target = EmbedSpeaker(target_utts, encoder);
  MelSpectrogram out;
  out.params = source_utts.front().params;
  out.log_scaled = true;
  out.frames = ConvertMel(model, source_utts.front().frames, target.AsRow());
  return out;
}

MatrixD MelCepstra(const MatrixF& log_mel, int coefficients) {
  const int f = static_cast<int>(log_mel.cols());
  const int k = std::min(coefficients, f - 1);
  if (k < 1) throw ValidationError("need at least 2 mel bins for cepstra");
  MatrixD basis(f, k);
  for (int c = 1; c <= k; ++c) {
    for (int m = 0; m < f; ++m) {
      basis(m, c - 1) = std::sqrt(2.0 / f) * std::cos(std::numbers::pi * c * (m + 0.5) / f);
    }
  }
  // Log power to log amplitude before the transform.
  return 0.5 * (log_mel.cast<double>() * basis);
}

double Mcd(const MatrixF& reference, const MatrixF& candidate) {
  if (reference.rows() < 1 || candidate.rows() < 1) {
    throw ValidationError("mcd inputs must have at least one frame");
  }
  if (reference.cols() != candidate.cols()) throw ValidationError("mcd inputs differ in mel bins");
  const MatrixD a = MelCepstra(reference);
  const MatrixD b = MelCepstra(candidate);
  const Eigen::Index n = a.rows(), m = b.rows();
  MatrixD cost(n, m);
  Eigen::MatrixXi length(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double d = (a.row(i) - b.row(j)).norm();
      if (i == 0 && j == 0) {
        cost(i, j) = d;
        length(i, j) = 1;
        continue;
      }
      double best = std::numeric_limits<double>::infinity();
      int best_len = 0;
      auto consider = [&](Eigen::Index pi, Eigen::Index pj) {
        if (pi < 0 || pj < 0) return;
        const double c = cost(pi, pj);
        const int l = length(pi, pj);
        if (c < best || (c == best && l < best_len)) {
          best = c;
          best_len = l;
        }
      };
      consider(i - 1, j - 1);
      consider(i - 1, j);
      consider(i, j - 1);
      cost(i, j) = best + d;
      length(i, j) = best_len + 1;
    }
  }
  const double scale = 10.0 / std::numbers::ln10 * std::sqrt(2.0);
  return scale * cost(n - 1, m - 1) / length(n - 1, m - 1);
}

double DetectionScore(const MatrixF& converted, const MatrixF& speaker_row,
                      const SpeakerEncoder<float>& encoder) {
  const Eigen::VectorXd e = EmbedUtterance(encoder, converted).cast<double>();
  const Eigen::VectorXd s = speaker_row.transpose().cast<double>();
  if (e.size() != s.size()) throw ValidationError("speaker embedding size mismatch");
  const double denom = e.norm() * s.norm();
  const double cosine = denom > 0.0 ? e.dot(s) / denom : 0.0;
  return std::clamp(0.5 * (1.0 + cosine), 0.0, 1.0);
}

double DetectionScore(const MatrixF& converted, const std::vector<MelSpectrogram>& target_utts,
                      const SpeakerEncoder<float>& encoder) {
  return DetectionScore(converted, EmbedSpeaker(target_utts, encoder).AsRow(), encoder);
}

double ProbeError(const MatrixD& predicted, const MatrixD& content) {
  if (predicted.rows() != content.rows() || predicted.cols() != content.cols()) {
    throw ValidationError("probe: prediction and content differ in shape");
  }
  const double n = static_cast<double>(content.size());
  const double mse = (predicted - content).squaredNorm() / n;
  const double power = content.squaredNorm() / n;
  return std::clamp(mse / (power + 1e-8), 0.0, 1.0);
}

double ProbeUtterance(const PmvcModel<float>& model, const MatrixF& mel) {
  Tape<float> tape(false);
  auto z = model.Encode(tape, tape.Constant(mel));
  Var<float> predicted = model.PredictContent(tape, z.prosody, 1.0f);
  return ProbeError(predicted.value().cast<double>(), z.content.value().cast<double>());
}

std::vector<TrainingItem> SelectUtterances(std::vector<TrainingItem> items, size_t count) {
  std::sort(items.begin(), items.end(), [](const TrainingItem& a, const TrainingItem& b) {
    return std::tie(a.speaker, a.utterance) < std::tie(b.speaker, b.utterance);
  });
  if (count >= items.size()) return items;
  std::vector<TrainingItem> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) out.push_back(items[i * items.size() / count]);
  return out;
}

ProbeReport ProbeContentLeakage(const PmvcModel<float>& model,
                                const std::vector<TrainingItem>& seen_items,
                                const std::vector<TrainingItem>& unseen_items, int n_utts) {
  if (n_utts < 2) throw ValidationError("probe needs at least 2 utterances");
  if (seen_items.empty() || unseen_items.empty()) {
    throw ValidationError("probe needs utterances from both seen and unseen speakers");
  }
  const size_t half = static_cast<size_t>(n_utts) / 2;
  ProbeReport report;
  std::vector<double> errors;
  for (const auto& item : SelectUtterances(seen_items, half)) {
    errors.push_back(ProbeUtterance(model, item.mel));
  }
  report.seen = Summarize(std::move(errors));
  errors.clear();
  for (const auto& item : SelectUtterances(unseen_items, static_cast<size_t>(n_utts) - half)) {
    errors.push_back(ProbeUtterance(model, item.mel));
  }
  report.unseen = Summarize(std::move(errors));
  return report;
}

void ExportLatents(const PmvcModel<float>& model, const std::vector<TrainingItem>& items,
                   const std::filesystem::path& out_path) {
  if (out_path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(out_path.parent_path(), ec);
  }
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw IoError("cannot write latents: " + out_path.string());
  char buf[32];
  for (const auto& item : items) {
    Tape<float> tape(false);
    const MatrixF z = model.Encode(tape, tape.Constant(item.mel)).z.value();
    out << item.speaker << ',' << item.utterance << ',' << model.config().content_dim;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      std::snprintf(buf, sizeof(buf), ",%.9g", static_cast<double>(z.data()[i]));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing latents: " + out_path.string());
}

std::vector<ConversionResult> EvaluateConversions(const PmvcModel<float>& model,
                                                  const SpeakerEncoder<float>& encoder,
                                                  const std::vector<TrainingItem>& items,
                                                  const std::vector<std::string>& speakers,
                                                  int reference_utterances) {
  std::map<std::string, std::vector<const TrainingItem*>> by_speaker;
  for (const auto& item : items) by_speaker[item.speaker].push_back(&item);
  for (auto& [name, list] : by_speaker) {
    std::sort(list.begin(), list.end(), [](const TrainingItem* a, const TrainingItem* b) {
      return a->utterance < b->utterance;
    });
  }
  std::map<std::string, MatrixF> references;
  for (const auto& s : speakers) {
    auto it = by_speaker.find(s);
    if (it == by_speaker.end()) throw ValidationError("no utterances for speaker '" + s + "'");
    references[s] =
        EmbedSpeaker(AsSpectrograms(it->second, static_cast<size_t>(reference_utterances)), encoder)
            .AsRow();
  }
  std::vector<ConversionResult> results;
  for (const auto& source : speakers) {
    const TrainingItem* src = by_speaker[source].back();
    for (const auto& target : speakers) {
      if (target == source) continue;
      const MatrixF converted = ConvertMel(model, src->mel, references[target]);
      ConversionResult r;
      r.source_speaker = source;
      r.target_speaker = target;
      r.source_utterance = src->utterance;
      r.score_target = DetectionScore(converted, references[target], encoder);
      r.score_source = DetectionScore(converted, references[source], encoder);
      r.mcd_target = Mcd(by_speaker[target].front()->mel, converted);
      results.push_back(std::move(r));
    }
  }
  return results;
}

std::vector<std::pair<int, int>> ParsePartitions(const std::string& spec) {
  std::vector<std::pair<int, int>> out;
  std::stringstream ss(spec);
  std::string token;
  while (std::getline(ss, token, ',')) {
    int c = 0, p = 0;
    char extra = 0;
    if (std::sscanf(token.c_str(), " %d/%d %c", &c, &p, &extra) != 2 || c < 1 || p < 1) {
      throw ConfigurationError("bad partition '" + token + "', expected content/prosody");
    }
    out.emplace_back(c, p);
  }
  if (out.empty()) throw ConfigurationError("partition list is empty");
  return out;
}

std::vector<PreparedItem> EvaluationBatch(const std::vector<TrainingItem>& items,
                                          const SpeakerTable& speakers, const RPConfig& rp,
                                          uint64_t seed) {
  std::vector<PreparedItem> batch;
  batch.reserve(items.size());
  for (size_t i = 0; i < items.size(); ++i) {
    batch.push_back(PrepareItem(items[i], speakers, rp, seed, kEvalProsodySalt, i));
  }
  return batch;
}

std::vector<PartitionResult> PartitionSweep(const std::vector<TrainingItem>& items,
                                            const SpeakerTable& speakers,
                                            const SpeakerEncoder<float>& encoder,
                                            const TrainOptions& base,
                                            const std::vector<std::pair<int, int>>& partitions,
                                            const std::vector<std::string>& conversion_speakers,
                                            int reference_utterances) {
  const auto eval_batch = EvaluationBatch(items, speakers, base.rp, base.train.seed);
  std::vector<PartitionResult> results;
  for (const auto& [content, prosody] : partitions) {
    PartitionResult r;
    r.content_dim = content;
    r.prosody_dim = prosody;
    TrainOptions options = base;
    options.model.content_dim = content;
    options.model.prosody_dim = prosody;
    if (base.run_dir) {
      options.run_dir = *base.run_dir / ("partition_" + std::to_string(content) + "_" +
                                         std::to_string(prosody));
    }
    try {
      const TrainResult trained = Train(items, speakers, options);
      r.final_recon = EvaluateLosses(trained.model, eval_batch, options.loss).recon;
      const auto conversions = EvaluateConversions(trained.model, encoder, items,
                                                   conversion_speakers, reference_utterances);
      double sum = 0.0;
      for (const auto& c : conversions) sum += c.score_target;
      r.detection_score = conversions.empty() ? 0.0 : sum / conversions.size();
      r.completed = std::isfinite(r.final_recon);
      if (!r.completed) r.error = "non-finite evaluation loss";
    } catch (const TrainingDivergenceError& e) {
      r.error = e.what();
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace pmvc
