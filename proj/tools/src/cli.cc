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

#include "pmvc/cli.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pmvc/checkpoint.h"
#include "pmvc/config.h"
#include "pmvc/dataset.h"
#include "pmvc/error.h"
#include "pmvc/evaluation.h"
#include "pmvc/prosody.h"
#include "pmvc/trainer.h"

namespace pmvc {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<uint64_t> seed;
  std::string run_dir;
};

struct Context {
  CommonOptions common;
  PmvcConfig config;
  fs::path run;
  std::ostream* out = nullptr;
};

void ResolveConfig(Context& ctx) {
  ctx.run = ctx.common.run_dir;
  const fs::path snapshot = ctx.run / "config.json";
  if (!ctx.common.config_path.empty()) {
    ctx.config = LoadConfig(ctx.common.config_path);
  } else if (fs::is_regular_file(snapshot)) {
    ctx.config = LoadConfig(snapshot);
  }
  for (const auto& o : ctx.common.overrides) ApplyOverride(ctx.config, o);
  if (ctx.common.seed) ctx.config.seed = *ctx.common.seed;
  ctx.config.Validate();
}

void WriteReport(const fs::path& path, const Json& report) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write report: " + path.string());
  out << report.dump(2) << "\n";
}

bool HasExtension(const fs::path& p, const char* ext) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e == ext;
}

MelSpectrogram LoadSpectrogram(const fs::path& path, const FrameParams& params) {
  if (HasExtension(path, ".mel")) {
    MelSpectrogram mel = ReadMel(path);
    if (!(mel.params == params)) {
      throw ValidationError(path.string() + " was computed with different frame parameters");
    }
    return mel;
  }
  return ComputeMel(LoadAudio(path, params.sample_rate), params);
}

fs::path Prerequisite(const fs::path& path, const std::string& what, const std::string& hint) {
  if (!fs::is_regular_file(path)) {
    throw StateError("missing prerequisite: " + what + " " + path.string() + " (" + hint + ")");
  }
  return path;
}

SpeakerEncoder<float> LoadSpeaker(const Context& ctx, const std::string& path_flag) {
  const fs::path path = Prerequisite(path_flag.empty() ? ctx.run / "speaker.ckpt" : fs::path(path_flag),
                                     "speaker checkpoint", "run `pmvc pretrain-speaker` first");
  return RestoreSpeakerEncoder(LoadSpeakerCheckpoint(path));
}

PmvcModel<float> LoadModel(const Context& ctx, const std::string& path_flag,
                           FrameParams* frame_params = nullptr) {
  const fs::path path =
      Prerequisite(path_flag.empty() ? ctx.run / "checkpoints" / "latest.ckpt" : fs::path(path_flag),
                   "model checkpoint", "run `pmvc train` first or pass --ckpt");
  const ModelCheckpoint ckpt = LoadModelCheckpoint(path);
  if (frame_params != nullptr) *frame_params = ckpt.frame_params;
  return RestoreModel(ckpt);
}

DatasetManifest LoadManifestFor(const Context& ctx) {
  DatasetManifest m = ReadManifest(ctx.run);
  if (!(m.frame_params == ctx.config.frontend)) {
    throw ConfigurationError("frontend settings differ from the prepared dataset in " +
                             ctx.run.string());
  }
  return m;
}

std::vector<std::string> FirstSpeakers(const std::vector<std::string>& speakers, int count) {
  const size_t n = std::min(speakers.size(), static_cast<size_t>(count));
  return {speakers.begin(), speakers.begin() + static_cast<std::ptrdiff_t>(n)};
}

Json ConversionsJson(const std::vector<ConversionResult>& results) {
  Json pairs = Json::array();
  int closer = 0;
  double mcd = 0.0;
  for (const auto& r : results) {
    pairs.push_back(Json{{"source", r.source_speaker},
                         {"target", r.target_speaker},
                         {"source_utterance", r.source_utterance},
                         {"score_target", r.score_target},
                         {"score_source", r.score_source},
                         {"mcd_db", r.mcd_target}});
    closer += r.score_target > r.score_source ? 1 : 0;
    mcd += r.mcd_target;
  }
  const double n = std::max<double>(1.0, static_cast<double>(results.size()));
  return Json{{"pairs", std::move(pairs)},
              {"count", results.size()},
              {"closer_to_target", closer},
              {"closer_to_target_fraction", closer / n},
              {"mean_mcd_db", mcd / n}};
}

// --- verbs ------------------------------------------------------------------

void RunPrepare(Context& ctx, const std::string& corpus) {
  const auto& c = ctx.config;
  PrepareOptions options{c.frontend, c.window_policy(), c.num_test_speakers, c.seed};
  const DatasetManifest m = PrepareDataset(corpus, ctx.run, options);
  SaveConfig(ctx.run / "config.json", c);
  *ctx.out << "prepared " << m.entries.size() << " utterances (" << m.train_speakers.size()
           << " train speakers, " << m.test_speakers.size() << " test speakers, "
           << m.skipped.size() << " skipped) in " << ctx.run.string() << "\n";
}

void RunPretrainSpeaker(Context& ctx, const std::string& out_flag) {
  const DatasetManifest m = LoadManifestFor(ctx);
  std::vector<LabeledMel> corpus;
  for (auto& item : LoadItems(m, Split::kTrain)) corpus.push_back({item.speaker, std::move(item.mel)});
  SpeakerPretrainConfig train = ctx.config.speaker_pretrain();
  train.log_interval = static_cast<int>(std::max<int64_t>(1, ctx.config.train.log_interval));
  train.on_log = [&](int step, double loss) {
    *ctx.out << "ge2e step=" << step << " loss=" << loss << "\n";
  };
  const SpeakerEncoder<float> encoder = PretrainSpeakerEncoder(corpus, ctx.config.speaker_config(), train);
  const fs::path out = out_flag.empty() ? ctx.run / "speaker.ckpt" : fs::path(out_flag);
  SaveSpeakerCheckpoint(out, encoder, ctx.config.frontend, train.steps);
  *ctx.out << "wrote " << out.string() << "\n";
}

void RunTrain(Context& ctx, const std::string& speaker_flag) {
  const SpeakerEncoder<float> encoder = LoadSpeaker(ctx, speaker_flag);
  const DatasetManifest m = LoadManifestFor(ctx);
  const auto items = LoadItems(m, Split::kTrain);
  const SpeakerTable table =
      BuildSpeakerTable(items, encoder, ctx.config.train.speaker_reference_utterances);
  WriteSpeakerTable(ctx.run / "speaker_embeddings.json", table);
  SaveConfig(ctx.run / "config.json", ctx.config);

  TrainOptions options = ctx.config.train_options();
  options.run_dir = ctx.run;
  options.on_log = [&](int64_t step, const LossBreakdown& b) { *ctx.out << b.ToLogLine(step) << "\n"; };
  Train(items, table, options);
  *ctx.out << "wrote " << (ctx.run / "checkpoints" / "latest.ckpt").string() << "\n";
}

void RunAugment(Context& ctx, const std::string& in, const std::string& out,
                const std::string& wav, std::optional<int> t, std::optional<double> low,
                std::optional<double> high) {
  RPConfig rp = ctx.config.rp;
  if (t) rp.split_length = *t;
  if (low) rp.rate_low = *low;
  if (high) rp.rate_high = *high;
  rp.Validate();
  const MelSpectrogram mel = LoadSpectrogram(in, ctx.config.frontend);
  const AugmentedPair pair = RandomProsody(mel, rp, ctx.config.seed);
  WriteMel(out, pair.augmented);
  *ctx.out << "wrote " << out << " (" << pair.augmented.num_frames() << " frames)\n";
  if (!wav.empty()) {
    WriteWav(wav, InvertMel(pair.augmented, ctx.config.eval.griffin_lim_iterations));
    *ctx.out << "wrote " << wav << "\n";
  }
}

void RunConvert(Context& ctx, const std::string& source, const std::string& target_dir,
                const std::string& ckpt, const std::string& speaker_flag, const std::string& out_flag) {
  FrameParams params;
  const PmvcModel<float> model = LoadModel(ctx, ckpt, &params);
  const SpeakerEncoder<float> encoder = LoadSpeaker(ctx, speaker_flag);
  if (!fs::is_directory(target_dir)) throw IoError("target directory not found: " + target_dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(target_dir)) {
    if (e.is_regular_file() && (HasExtension(e.path(), ".wav") || HasExtension(e.path(), ".mel"))) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.size() > static_cast<size_t>(ctx.config.eval.reference_utterances)) {
    files.resize(static_cast<size_t>(ctx.config.eval.reference_utterances));
  }
  if (files.empty()) throw ValidationError("no .wav or .mel files in " + target_dir);
  std::vector<MelSpectrogram> targets;
  for (const auto& f : files) targets.push_back(LoadSpectrogram(f, params));
  const MelSpectrogram converted = Convert({LoadSpectrogram(source, params)}, targets, model, encoder);

  fs::path prefix = out_flag;
  if (prefix.empty()) {
    prefix = ctx.run / "converted" /
             (fs::path(source).stem().string() + "_to_" + fs::path(target_dir).filename().string());
  }
  if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
  fs::path mel_path = prefix, wav_path = prefix;
  mel_path += ".mel";
  wav_path += ".wav";
  WriteMel(mel_path, converted);
  WriteWav(wav_path, InvertMel(converted, ctx.config.eval.griffin_lim_iterations));
  *ctx.out << "wrote " << mel_path.string() << " and " << wav_path.string() << "\n";
}

void RunEvaluate(Context& ctx, const std::string& ckpt, const std::string& speaker_flag) {
  const PmvcModel<float> model = LoadModel(ctx, ckpt);
  const SpeakerEncoder<float> encoder = LoadSpeaker(ctx, speaker_flag);
  const DatasetManifest m = LoadManifestFor(ctx);
  const auto& e = ctx.config.eval;
  Json report;
  const auto seen = EvaluateConversions(model, encoder, LoadItems(m, Split::kTrain),
                                        FirstSpeakers(m.train_speakers, e.conversion_speakers),
                                        e.reference_utterances);
  report["seen"] = ConversionsJson(seen);
  if (m.test_speakers.size() >= 2) {
    const auto unseen = EvaluateConversions(model, encoder, LoadItems(m, Split::kTest),
                                            FirstSpeakers(m.test_speakers, e.conversion_speakers),
                                            e.reference_utterances);
    report["unseen"] = ConversionsJson(unseen);
  }
  const fs::path path = ctx.run / "reports" / "evaluate.json";
  WriteReport(path, report);
  *ctx.out << "seen pairs closer to target: " << report["seen"]["closer_to_target"] << "/"
           << report["seen"]["count"] << ", mean MCD " << report["seen"]["mean_mcd_db"]
           << " dB\nwrote " << path.string() << "\n";
}

void RunProbe(Context& ctx, const std::string& ckpt, const std::string& label) {
  const PmvcModel<float> model = LoadModel(ctx, ckpt);
  const DatasetManifest m = LoadManifestFor(ctx);
  const ProbeReport r = ProbeContentLeakage(model, LoadItems(m, Split::kTrain),
                                            LoadItems(m, Split::kTest), ctx.config.eval.probe_utterances);
  auto split = [](const ProbeSplit& s) {
    return Json{{"mean", s.mean}, {"std", s.stddev}, {"errors", s.errors}};
  };
  const Json report{{"label", label}, {"seen", split(r.seen)}, {"unseen", split(r.unseen)}};
  const fs::path path = ctx.run / "reports" / ("probe_" + label + ".json");
  WriteReport(path, report);
  *ctx.out << "probe error seen " << r.seen.mean << " +- " << r.seen.stddev << ", unseen "
           << r.unseen.mean << " +- " << r.unseen.stddev << "\nwrote " << path.string() << "\n";
}

void RunSweep(Context& ctx, const std::string& speaker_flag) {
  const SpeakerEncoder<float> encoder = LoadSpeaker(ctx, speaker_flag);
  const DatasetManifest m = LoadManifestFor(ctx);
  const auto items = LoadItems(m, Split::kTrain);
  const SpeakerTable table =
      BuildSpeakerTable(items, encoder, ctx.config.train.speaker_reference_utterances);
  TrainOptions options = ctx.config.train_options();
  options.run_dir = ctx.run / "sweep";
  const auto results = PartitionSweep(items, table, encoder, options,
                                      ParsePartitions(ctx.config.eval.partitions),
                                      FirstSpeakers(m.train_speakers, ctx.config.eval.conversion_speakers),
                                      ctx.config.eval.reference_utterances);
  Json rows = Json::array();
  for (const auto& r : results) {
    rows.push_back(Json{{"content_dim", r.content_dim},
                        {"prosody_dim", r.prosody_dim},
                        {"completed", r.completed},
                        {"error", r.error},
                        {"final_recon", r.final_recon},
                        {"detection_score", r.detection_score}});
    *ctx.out << "C:" << r.content_dim << " P:" << r.prosody_dim
             << (r.completed ? "" : " DIVERGED " + r.error) << " recon=" << r.final_recon
             << " detection=" << r.detection_score << "\n";
  }
  const fs::path path = ctx.run / "reports" / "sweep.json";
  WriteReport(path, Json{{"partitions", std::move(rows)}});
  *ctx.out << "wrote " << path.string() << "\n";
}

void RunExportLatents(Context& ctx, const std::string& ckpt, const std::string& out_flag,
                      const std::vector<std::string>& speakers, std::optional<int> per_speaker) {
  const PmvcModel<float> model = LoadModel(ctx, ckpt);
  const DatasetManifest m = LoadManifestFor(ctx);
  const int limit = per_speaker.value_or(ctx.config.eval.export_per_speaker);
  if (limit < 1) throw ValidationError("--per-speaker must be >= 1");
  std::map<std::string, std::vector<TrainingItem>> by_speaker;
  for (auto& item : LoadItems(m, Split::kAll)) by_speaker[item.speaker].push_back(std::move(item));
  std::vector<TrainingItem> selected;
  for (auto& [speaker, list] : by_speaker) {
    if (!speakers.empty() && std::find(speakers.begin(), speakers.end(), speaker) == speakers.end()) {
      continue;
    }
    std::sort(list.begin(), list.end(),
              [](const TrainingItem& a, const TrainingItem& b) { return a.utterance < b.utterance; });
    for (size_t i = 0; i < std::min(list.size(), static_cast<size_t>(limit)); ++i) {
      selected.push_back(std::move(list[i]));
    }
  }
  for (const auto& s : speakers) {
    if (by_speaker.count(s) == 0) throw ValidationError("unknown speaker '" + s + "'");
  }
  const fs::path out = out_flag.empty() ? ctx.run / "reports" / "latents.csv" : fs::path(out_flag);
  ExportLatents(model, selected, out);
  *ctx.out << "wrote " << selected.size() << " rows to " << out.string() << "\n";
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"pmvc: prosody/content/timbre disentangling voice conversion"};
  app.require_subcommand(1);
  app.footer("\n" + ConfigHelpText());

  Context ctx;
  ctx.out = &out;
  CommonOptions& common = ctx.common;
  const char* env_run = std::getenv(kRunDirEnv);
  common.run_dir = env_run != nullptr && *env_run != '\0' ? env_run : kDefaultRunDir;

  app.option_defaults()->always_capture_default();
  app.add_option("--config", common.config_path, "JSON config file (default: <run-dir>/config.json if present)");
  app.add_option("--set", common.overrides, "override a config key, key=value (repeatable)");
  app.add_option("--seed", common.seed, "root seed (overrides the config key 'seed')");
  app.add_option("--run-dir", common.run_dir, std::string("run directory (env ") + kRunDirEnv + ")");
  app.fallthrough();

  std::string corpus;
  auto* prepare = app.add_subcommand("prepare", "compute fitted mels and a manifest from corpus/<speaker>/*.wav");
  prepare->add_option("--corpus", corpus, "corpus directory")->required();

  std::string speaker_out;
  auto* pretrain = app.add_subcommand("pretrain-speaker", "train the GE2E speaker encoder");
  pretrain->add_option("--out", speaker_out, "output checkpoint (default <run-dir>/speaker.ckpt)");

  std::string speaker_ckpt;
  auto* train = app.add_subcommand("train", "train the conversion model");
  train->add_option("--speaker-ckpt", speaker_ckpt, "speaker encoder checkpoint");

  std::string aug_in, aug_out, aug_wav;
  std::optional<int> aug_t;
  std::optional<double> aug_low, aug_high;
  auto* augment = app.add_subcommand("augment", "apply Random Prosody to one utterance");
  augment->add_option("--in", aug_in, "input .wav or .mel")->required();
  augment->add_option("--out", aug_out, "output .mel")->required();
  augment->add_option("--wav", aug_wav, "also write a Griffin-Lim .wav");
  augment->add_option("--t", aug_t, "segment length in frames");
  augment->add_option("--rate-low", aug_low, "lowest stretch rate");
  augment->add_option("--rate-high", aug_high, "highest stretch rate");

  std::string ckpt, source, target_dir, conv_out;
  auto* convert = app.add_subcommand("convert", "convert a source utterance to a target speaker");
  convert->add_option("--source", source, "source .wav or .mel")->required();
  convert->add_option("--target-dir", target_dir, "directory of target speaker .wav/.mel files")->required();
  convert->add_option("--ckpt", ckpt, "model checkpoint (default <run-dir>/checkpoints/latest.ckpt)");
  convert->add_option("--speaker-ckpt", speaker_ckpt, "speaker encoder checkpoint");
  convert->add_option("--out", conv_out, "output path prefix for .mel and .wav");

  auto* evaluate = app.add_subcommand("evaluate", "conversion pairs: detection scores and MCD");
  evaluate->add_option("--ckpt", ckpt, "model checkpoint");
  evaluate->add_option("--speaker-ckpt", speaker_ckpt, "speaker encoder checkpoint");

  std::string label = "model";
  auto* probe = app.add_subcommand("probe", "content leakage probe on seen and unseen speakers");
  probe->add_option("--ckpt", ckpt, "model checkpoint");
  probe->add_option("--label", label, "report name suffix");

  auto* sweep = app.add_subcommand("sweep", "train and compare content/prosody partitions");
  sweep->add_option("--speaker-ckpt", speaker_ckpt, "speaker encoder checkpoint");

  std::string latents_out;
  std::vector<std::string> speakers;
  std::optional<int> per_speaker;
  auto* export_latents = app.add_subcommand("export-latents", "write encoder latents as CSV");
  export_latents->add_option("--ckpt", ckpt, "model checkpoint");
  export_latents->add_option("--out", latents_out, "output CSV (default <run-dir>/reports/latents.csv)");
  export_latents->add_option("--speakers", speakers, "speakers to export (default all)")->delimiter(',');
  export_latents->add_option("--per-speaker", per_speaker, "utterances per speaker");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error[E_USAGE]: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kValidation);
  }

  try {
    ResolveConfig(ctx);
    if (*prepare) {
      RunPrepare(ctx, corpus);
    } else if (*pretrain) {
      RunPretrainSpeaker(ctx, speaker_out);
    } else if (*train) {
      RunTrain(ctx, speaker_ckpt);
    } else if (*augment) {
      RunAugment(ctx, aug_in, aug_out, aug_wav, aug_t, aug_low, aug_high);
    } else if (*convert) {
      RunConvert(ctx, source, target_dir, ckpt, speaker_ckpt, conv_out);
    } else if (*evaluate) {
      RunEvaluate(ctx, ckpt, speaker_ckpt);
    } else if (*probe) {
      RunProbe(ctx, ckpt, label);
    } else if (*sweep) {
      RunSweep(ctx, speaker_ckpt);
    } else if (*export_latents) {
      RunExportLatents(ctx, ckpt, latents_out, speakers, per_speaker);
    }
  } catch (const Error& e) {
    err << "error[" << e.code() << "]: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const fs::filesystem_error& e) {
    err << "error[E_IO]: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kIo);
  } catch (const std::exception& e) {
    err << "error[E_RUNTIME]: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kRuntime);
  }
  return 0;
}

}  // namespace pmvc
