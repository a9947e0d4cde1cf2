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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "cli_pipeline.h"
#include "pmvc/checkpoint.h"
#include "pmvc/config.h"
#include "pmvc/dataset.h"
#include "pmvc/evaluation.h"
#include "pmvc/model.h"
#include "pmvc/objectives.h"
#include "pmvc/optimizer.h"
#include "pmvc/prosody.h"
#include "pmvc/speaker_encoder.h"
#include "pmvc/synthetic.h"
#include "pmvc/trainer.h"
#include "test_util.h"

namespace pmvc {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

MelSpectrogram Spec(const MatrixF& frames) {
  MelSpectrogram m;
  m.frames = frames;
  m.params.mel_bins = static_cast<int>(frames.cols());
  return m;
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// --- 1-5, 11: algorithmic criteria -------------------------------------------

Outcome RpLengthPreservation() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(101);
  int exceptions = 0, mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int t = std::vector<int>{1, 2, 4}[UniformIndex(rng, 3)];
    // T >= t is a precondition of the augmentation.
    const int lo = std::max(2, t);
    const int frames = lo + static_cast<int>(UniformIndex(rng, static_cast<uint64_t>(1024 - lo + 1)));
    try {
      const auto spec = Spec(testing::RandomMatrixF(frames, 8, rng));
      if (RandomProsody(spec, RPConfig{t, 0.6, 2.0}, rng()).augmented.num_frames() != frames) ++mismatches;
    } catch (const std::exception&) {
      ++exceptions;
    }
  }
  const double elapsed = Seconds(start);
  return {mismatches == 0 && exceptions == 0 && elapsed < 10.0,
          Format("mismatches=%d exceptions=%d runtime=%.2fs", mismatches, exceptions, elapsed)};
}

Outcome RpIdentityCollapse() {
  Rng rng(102);
  RPConfig cfg;
  cfg.rate_low = cfg.rate_high = 1.0;
  int identical = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int frames = 2 + static_cast<int>(UniformIndex(rng, 400));
    const auto spec = Spec(testing::RandomMatrixF(frames, 16, rng));
    const MatrixF out = RandomProsody(spec, cfg, rng()).augmented.frames;
    identical += out.rows() == spec.frames.rows() &&
                 std::equal(out.data(), out.data() + out.size(), spec.frames.data());
  }
  return {identical == 100, Format("bitwise identical %d/100", identical)};
}

Outcome DurationPairing() {
  Rng rng(103);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double a = UniformReal(rng, 0.5001, 2.0);
    worst = std::max(worst, std::abs(1.0 / a + 1.0 / PartnerRate(a) - 2.0));
  }
  return {worst < 1e-12, Format("max |1/a + 1/a' - 2| = %.3g", worst)};
}

Outcome InstanceNormStatistics() {
  Rng rng(104);
  double worst_mean = 0.0, worst_std = 0.0;
  for (int t : {4, 64, 256}) {
    for (int c : {1, 80, 512}) {
      const MatrixD x = (testing::RandomMatrix(t, c, rng, 4.0).array() + 3.0).matrix();
      Tape<double> tape(false);
      const MatrixD y = ag::InstanceNorm(tape.Constant(x), 1e-5).value();
      for (int j = 0; j < c; ++j) {
        const double mean = y.col(j).mean();
        const double std = std::sqrt((y.col(j).array() - mean).square().mean());
        worst_mean = std::max(worst_mean, std::abs(mean));
        worst_std = std::max(worst_std, std::abs(std - 1.0));
      }
    }
  }
  MatrixD hand(3, 1);
  hand << 1, 2, 3;
  const MatrixD y = InstanceNormalize(hand, 1e-5);
  const double hand_err = std::max({std::abs(y(0, 0) + 1.2247), std::abs(y(1, 0)), std::abs(y(2, 0) - 1.2247)});
  return {worst_mean < 1e-6 && worst_std < 1e-3 && hand_err < 1e-4,
          Format("max|mean|=%.2g max|std-1|=%.2g hand case err=%.2g", worst_mean, worst_std, hand_err)};
}

Outcome GradientReversalCorrectness() {
  Rng rng(105);
  const MatrixD x0 = testing::RandomMatrix(6, 4, rng);
  const MatrixD w = testing::RandomMatrix(4, 3, rng);
  auto head = [&](Tape<double>& tape, Var<double> y) {
    return testing::Project(tape, ag::Tanh(ag::MatMul(y, tape.Constant(w))));
  };
  auto analytic = [&](bool reversed, double lambda) {
    Tape<double> tape;
    const auto x = tape.Leaf(x0);
    tape.Backward(head(tape, reversed ? ag::GradientReversal(x, lambda) : x));
    return tape.GradOf(x);
  };
  const MatrixD identity = analytic(false, 0.0);
  double worst_elem = 0.0, worst_fd = 0.0;
  // Finite differences of the head see the identity forward pass.
  MatrixD numeric(x0.rows(), x0.cols());
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    auto value = [&](double delta) {
      MatrixD xp = x0;
      xp.data()[i] += delta;
      Tape<double> tape(false);
      return head(tape, tape.Constant(xp)).scalar();
    };
    numeric.data()[i] = (value(1e-6) - value(-1e-6)) / 2e-6;
  }
  for (double lambda : {0.5, 1.0, 2.0}) {
    const MatrixD reversed = analytic(true, lambda);
    worst_elem = std::max(worst_elem, (reversed + lambda * identity).cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < x0.size(); ++i) {
      worst_fd = std::max(worst_fd, testing::RelativeError(reversed.data()[i], -lambda * numeric.data()[i]));
    }
  }
  return {worst_elem < 1e-6 && worst_fd < 1e-4,
          Format("max|g_grl + lambda g_id|=%.2g, finite-difference rel err=%.2g", worst_elem, worst_fd)};
}

Outcome ParameterCountDirection() {
  const ModelConfig cfg;
  const size_t single = PmvcModel<float>::Create(cfg, 0).CountParameters().total();
  const size_t twin = CountTwoEncoderParameters(cfg);
  const double ratio = static_cast<double>(twin) / static_cast<double>(single);
  return {ratio > 1.3, Format("two-encoder %zu vs %zu parameters, ratio %.3f", twin, single, ratio)};
}

// --- 6: full-model gradient check ---------------------------------------------

Outcome FullModelGradientCheck() {
  const auto start = std::chrono::steady_clock::now();
  ModelConfig cfg;
  cfg.mel_bins = 8;
  cfg.content_dim = 4;
  cfg.prosody_dim = 4;
  cfg.speaker_dim = 4;
  cfg.encoder_conv_layers = 1;
  cfg.encoder_channels = 8;
  cfg.encoder_kernel = 3;
  cfg.predictor_recurrent_layers = 1;
  cfg.predictor_hidden = 4;
  cfg.predictor_conv_layers = 1;
  cfg.predictor_channels = 4;
  cfg.predictor_kernel = 3;
  cfg.decoder_conv_layers = 1;
  cfg.decoder_channels = 8;
  cfg.decoder_kernel = 3;
  cfg.decoder_recurrent_hidden = 4;
  auto model = PmvcModel<double>::Create(cfg, 7);

  Rng rng(106);
  const MatrixF mel = testing::RandomMatrixF(8, 8, rng);
  PreparedItem item{mel, RandomProsody(Spec(mel), RPConfig{}, 3).augmented.frames,
                    testing::RandomMatrixF(1, 4, rng)};
  const std::vector<PreparedItem> batch{item};
  LossOptions options;
  options.mode = GradientMode::kPlainTotal;

  Tape<double> tape;
  const BatchGraph<double> graph = BuildBatchGraph(model, tape, batch, options);
  tape.Backward(graph.objective);
  const std::vector<MatrixD> grads = CollectGrads(tape, model.params());

  auto total = [&]() {
    Tape<double> t(false);
    return BuildBatchGraph(model, t, batch, options).breakdown.total;
  };
  const double h = 1e-6;
  double worst = 0.0;
  size_t checked = 0;
  for (size_t p = 0; p < model.params().size(); ++p) {
    MatrixD& value = model.params()[p].value;
    for (Eigen::Index i = 0; i < value.size(); ++i) {
      const double saved = value.data()[i];
      value.data()[i] = saved + h;
      const double up = total();
      value.data()[i] = saved - h;
      const double down = total();
      value.data()[i] = saved;
      const double analytic = grads[p].size() == 0 ? 0.0 : grads[p].data()[i];
      worst = std::max(worst, testing::RelativeError(analytic, (up - down) / (2.0 * h)));
      ++checked;
    }
  }
  const double elapsed = Seconds(start);
  return {worst < 1e-3 && elapsed < 120.0,
          Format("%zu parameters, max relative error %.3g, runtime %.1fs", checked, worst, elapsed)};
}

// --- desk fixture -------------------------------------------------------------

struct Desk {
  PmvcConfig config;
  fs::path root;
  DatasetManifest manifest;
  std::vector<TrainingItem> train;
  std::vector<TrainingItem> test;
  SpeakerEncoder<float> encoder;
  SpeakerTable table;
  std::vector<std::string> conversion_speakers;
};

Desk BuildDesk() {
  Desk d;
  d.config = LoadConfig(PMVC_SOURCE_DIR "/configs/desk.json");
  d.config.Validate();
  d.root = fs::temp_directory_path() / "pmvc_acceptance";
  fs::remove_all(d.root);
  SyntheticCorpusConfig sc;
  sc.sample_rate = d.config.frontend.sample_rate;
  sc.seed = d.config.seed;
  WriteSyntheticCorpus(d.root / "corpus", sc);
  PrepareOptions po{d.config.frontend, d.config.window_policy(), d.config.num_test_speakers, d.config.seed};
  d.manifest = PrepareDataset(d.root / "corpus", d.root / "data", po);
  d.train = LoadItems(d.manifest, Split::kTrain);
  d.test = LoadItems(d.manifest, Split::kTest);
  std::vector<LabeledMel> labeled;
  for (const auto& item : d.train) labeled.push_back({item.speaker, item.mel});
  d.encoder = PretrainSpeakerEncoder(labeled, d.config.speaker_config(), d.config.speaker_pretrain());
  d.table = BuildSpeakerTable(d.train, d.encoder, d.config.train.speaker_reference_utterances);
  const size_t n = std::min<size_t>(d.manifest.train_speakers.size(),
                                    static_cast<size_t>(d.config.eval.conversion_speakers));
  d.conversion_speakers.assign(d.manifest.train_speakers.begin(), d.manifest.train_speakers.begin() + n);
  return d;
}

// --- 7: overfit smoke test ----------------------------------------------------

Outcome OverfitSmoke(const Desk& desk) {
  const auto start = std::chrono::steady_clock::now();
  SyntheticCorpusConfig sc;
  sc.speakers = 2;
  sc.utterances_per_speaker = 20;
  sc.sample_rate = desk.config.frontend.sample_rate;
  sc.seed = 77;
  std::vector<TrainingItem> items;
  const FrameWindowPolicy policy = desk.config.window_policy();
  for (int s = 0; s < sc.speakers; ++s) {
    for (int u = 0; u < sc.utterances_per_speaker; ++u) {
      const SyntheticUtterance utt = SynthesizeUtterance(sc, s, u);
      const MelSpectrogram mel = FitFrames(ComputeMel(utt.clip, desk.config.frontend), policy, u);
      items.push_back({utt.speaker, utt.utterance, mel.frames});
    }
  }
  const SpeakerTable table = BuildSpeakerTable(items, desk.encoder, 10);

  TrainOptions options = desk.config.train_options();
  options.model.content_dim = 16;
  options.model.prosody_dim = 16;
  options.model.encoder_conv_layers = 1;
  options.model.encoder_channels = 32;
  options.model.predictor_hidden = 8;
  options.model.predictor_channels = 16;
  options.model.decoder_conv_layers = 1;
  options.model.decoder_channels = 32;
  options.model.decoder_recurrent_hidden = 32;
  options.train.batch_size = 4;
  options.train.total_steps = 2000;
  options.train.lr_final_fraction = 1.0;
  options.run_dir.reset();

  const auto eval_batch = EvaluationBatch(items, table, options.rp, 11);
  const auto initial_model = PmvcModel<float>::Create(options.model, 7);
  const double initial = EvaluateLosses(initial_model, eval_batch, options.loss).recon;
  const TrainResult r = Train(items, table, options, &initial_model);
  const double final_recon = EvaluateLosses(r.model, eval_batch, options.loss).recon;
  const double elapsed = Seconds(start);
  return {final_recon < 0.1 * initial && elapsed < 900.0,
          Format("recon %.4f -> %.4f (ratio %.4f), runtime %.1fs", initial, final_recon, final_recon / initial,
                 elapsed)};
}

// --- 8-10, 12: desk training runs ---------------------------------------------

struct DeskRuns {
  std::vector<PartitionResult> sweep;
  PmvcModel<float> with_adv;
  TrainResult without_adv;
  fs::path without_adv_dir;
};

DeskRuns TrainDesk(const Desk& desk) {
  DeskRuns runs{};
  TrainOptions base = desk.config.train_options();
  base.run_dir = desk.root / "sweep";
  runs.sweep = PartitionSweep(desk.train, desk.table, desk.encoder, base,
                              ParsePartitions(desk.config.eval.partitions), desk.conversion_speakers,
                              desk.config.eval.reference_utterances);
  // The 128/128 sweep member is the reference model trained with the
  // adversarial term.
  const fs::path reference =
      *base.run_dir / Format("partition_%d_%d", base.model.content_dim, base.model.prosody_dim) /
      "checkpoints" / "latest.ckpt";
  runs.with_adv = RestoreModel(LoadModelCheckpoint(reference));

  TrainOptions plain = desk.config.train_options();
  plain.loss.weights.beta = 0.0;
  runs.without_adv_dir = desk.root / "without_adv";
  plain.run_dir = runs.without_adv_dir;
  runs.without_adv = Train(desk.train, desk.table, plain);
  return runs;
}

Outcome DisentanglementDirection(const Desk& desk, const DeskRuns& runs) {
  const int n = desk.config.eval.probe_utterances;
  const ProbeReport with = ProbeContentLeakage(runs.with_adv, desk.train, desk.test, n);
  const ProbeReport without = ProbeContentLeakage(runs.without_adv.model, desk.train, desk.test, n);
  const double seen_ratio = with.seen.mean / std::max(without.seen.mean, 1e-12);
  const double unseen_ratio = with.unseen.mean / std::max(without.unseen.mean, 1e-12);
  return {with.seen.mean >= 2.0 * without.seen.mean && with.unseen.mean >= 2.0 * without.unseen.mean,
          Format("seen %.3f+-%.3f vs %.3f+-%.3f (x%.2f); unseen %.3f+-%.3f vs %.3f+-%.3f (x%.2f)", with.seen.mean,
                 with.seen.stddev, without.seen.mean, without.seen.stddev, seen_ratio, with.unseen.mean,
                 with.unseen.stddev, without.unseen.mean, without.unseen.stddev, unseen_ratio)};
}

Outcome ConversionSanity(const Desk& desk, const DeskRuns& runs) {
  const auto results = EvaluateConversions(runs.with_adv, desk.encoder, desk.train, desk.conversion_speakers,
                                           desk.config.eval.reference_utterances);
  int closer = 0;
  double mcd = 0.0;
  for (const auto& r : results) {
    closer += r.score_target > r.score_source;
    mcd += r.mcd_target;
  }
  const int count = static_cast<int>(results.size());
  return {count == 12 && closer >= 0.8 * count,
          Format("%d/%d pairs closer to target, mean MCD %.2f dB (not asserted)", closer, count,
                 count > 0 ? mcd / count : 0.0)};
}

Outcome PartitionFlexibility(const DeskRuns& runs) {
  bool finite = runs.sweep.size() == 5;
  double lo_r = INFINITY, hi_r = 0.0, lo_d = INFINITY, hi_d = -INFINITY;
  std::string rows;
  for (const auto& r : runs.sweep) {
    finite = finite && r.completed && std::isfinite(r.final_recon) && std::isfinite(r.detection_score);
    lo_r = std::min(lo_r, r.final_recon);
    hi_r = std::max(hi_r, r.final_recon);
    lo_d = std::min(lo_d, r.detection_score);
    hi_d = std::max(hi_d, r.detection_score);
    rows += Format(" %d/%d:recon=%.4f,det=%.4f", r.content_dim, r.prosody_dim, r.final_recon, r.detection_score);
  }
  const double spread = hi_r / lo_r - 1.0;
  const double band = hi_d - lo_d;
  return {finite && spread <= 0.2 && band <= 0.1,
          Format("recon spread %.1f%%, detection band %.4f;", 100.0 * spread, band) + rows};
}

Outcome Determinism(const Desk& desk, const DeskRuns& runs) {
  // CLI: every verb twice in fresh run directories.
  const fs::path ws = testing::MakeCliWorkspace(desk.root / "cli");
  const auto codes_a = testing::RunFullPipeline(ws, "run_a");
  const auto codes_b = testing::RunFullPipeline(ws, "run_b");
  int failed_verbs = 0, differing = 0;
  for (size_t i = 0; i < codes_a.size(); ++i) failed_verbs += (codes_a[i].second != 0) + (codes_b[i].second != 0);
  for (const auto& name : testing::PipelineArtifacts()) {
    const fs::path a = ws / "run_a" / name, b = ws / "run_b" / name;
    if (!fs::exists(a) || testing::ReadFileBytes(a) != testing::ReadFileBytes(b)) ++differing;
  }

  // Checkpoint round trip of the desk model on a fixed batch.
  const PmvcModel<float> restored =
      RestoreModel(LoadModelCheckpoint(runs.without_adv_dir / "checkpoints" / "latest.ckpt"));
  const auto batch = EvaluationBatch(SelectUtterances(desk.train, 8), desk.table, desk.config.rp, 5);
  const LossOptions options = desk.config.loss_options();
  const LossBreakdown x = EvaluateLosses(runs.without_adv.model, batch, options);
  const LossBreakdown y = EvaluateLosses(restored, batch, options);
  const bool bitwise = x.recon == y.recon && x.sim == y.sim && x.adv == y.adv && x.total == y.total;
  return {failed_verbs == 0 && differing == 0 && bitwise,
          Format("%zu verbs x2 (failures %d), %zu artifacts compared (differing %d), checkpoint round trip %s",
                 codes_a.size(), failed_verbs, testing::PipelineArtifacts().size(), differing,
                 bitwise ? "bitwise equal" : "DIFFERS")};
}

int Run() {
  struct Row {
    int id;
    const char* name;
    Outcome outcome;
  };
  std::vector<Row> rows;
  auto record = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    rows.push_back({id, name, o});
    std::printf("%s criterion %2d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(),
                Seconds(start));
    std::fflush(stdout);
  };

  record(1, "rp length preservation", RpLengthPreservation);
  record(2, "rp identity collapse", RpIdentityCollapse);
  record(3, "duration pairing identity", DurationPairing);
  record(4, "instance norm statistics", InstanceNormStatistics);
  record(5, "gradient reversal", GradientReversalCorrectness);
  record(6, "full model gradient check", FullModelGradientCheck);
  record(11, "parameter count direction", ParameterCountDirection);

  std::printf("building desk fixture (synthetic corpus, speaker encoder)...\n");
  std::fflush(stdout);
  const auto start = std::chrono::steady_clock::now();
  const Desk desk = BuildDesk();
  std::printf("desk fixture ready: %zu train / %zu test utterances [%.1fs]\n", desk.train.size(),
              desk.test.size(), Seconds(start));
  std::fflush(stdout);

  record(7, "overfit smoke test", [&] { return OverfitSmoke(desk); });

  std::printf("training desk models (partition sweep + no-adversary run)...\n");
  std::fflush(stdout);
  const auto train_start = std::chrono::steady_clock::now();
  DeskRuns runs;
  std::string train_error;
  try {
    runs = TrainDesk(desk);
  } catch (const std::exception& e) {
    train_error = e.what();
  }
  std::printf("desk training done [%.1fs]\n", Seconds(train_start));
  auto needs_runs = [&](const std::function<Outcome()>& fn) {
    return [&, fn] { return train_error.empty() ? fn() : Outcome{false, "desk training failed: " + train_error}; };
  };
  record(8, "disentanglement direction", needs_runs([&] { return DisentanglementDirection(desk, runs); }));
  record(9, "conversion sanity", needs_runs([&] { return ConversionSanity(desk, runs); }));
  record(10, "partition flexibility", needs_runs([&] { return PartitionFlexibility(runs); }));
  record(12, "determinism", needs_runs([&] { return Determinism(desk, runs); }));

  int failures = 0;
  for (const auto& r : rows) failures += !r.outcome.pass;
  std::printf("%zu criteria, %d failed\n", rows.size(), failures);
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace pmvc

int main() { return pmvc::Run(); }
