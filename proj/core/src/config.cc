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

#include "pmvc/config.h"

#include <cmath>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <sstream>
#include <type_traits>

#include "json_io.h"
#include "pmvc/error.h"
#include "pmvc/rng.h"

namespace pmvc {
namespace {

using internal::Json;

struct KeyDef {
  std::string name;
  std::string help;
  std::function<Json(const PmvcConfig&)> get;
  std::function<void(PmvcConfig&, const Json&)> set;
};

template <typename T>
T ConvertValue(const Json& v, const std::string& key) {
  auto bad = [&](const char* expected) {
    return ConfigurationError("config key '" + key + "' expects " + expected + ", got " + v.dump());
  };
  if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw bad("a string");
    return v.get<std::string>();
  } else if constexpr (std::is_same_v<T, double>) {
    if (!v.is_number()) throw bad("a number");
    return v.get<double>();
  } else {
    if (v.is_number_integer() || v.is_number_unsigned()) {
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && v.get<int64_t>() < 0) throw bad("a non-negative integer");
      }
      return v.get<T>();
    }
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<T>(d);
    }
    throw bad("an integer");
  }
}

template <typename F>
KeyDef Bind(const char* name, const char* help, F ref) {
  return KeyDef{
      name, help,
      [ref](const PmvcConfig& c) { return Json(ref(const_cast<PmvcConfig&>(c))); },
      [ref, key = std::string(name)](PmvcConfig& c, const Json& v) {
        using T = std::decay_t<decltype(ref(c))>;
        ref(c) = ConvertValue<T>(v, key);
      }};
}

#define PMVC_KEY(name, field, help) \
  Bind(name, help, [](PmvcConfig& c) -> auto& { return c.field; })

const std::vector<KeyDef>& Registry() {
  static const std::vector<KeyDef> keys = {
      PMVC_KEY("frontend.sample_rate", frontend.sample_rate, "analysis sample rate (Hz); audio is resampled to it"),
      PMVC_KEY("frontend.fft_size", frontend.fft_size, "FFT length in samples"),
      PMVC_KEY("frontend.hop_length", frontend.hop_length, "frame hop in samples"),
      PMVC_KEY("frontend.win_length", frontend.win_length, "analysis window length in samples"),
      PMVC_KEY("frontend.mel_bins", frontend.mel_bins, "number of mel bins F"),
      PMVC_KEY("frontend.fmin", frontend.fmin, "lowest mel filter edge (Hz)"),
      PMVC_KEY("frontend.fmax", frontend.fmax, "highest mel filter edge (Hz); 0 means sample_rate/2"),
      PMVC_KEY("frontend.floor_epsilon", frontend.floor_epsilon, "added to mel power before the log"),
      PMVC_KEY("frames.target_frames", target_frames, "training window length in frames"),
      PMVC_KEY("frames.crop_rule", crop_rule, "random_window or left_window; padding uses log(floor_epsilon)"),
      PMVC_KEY("rp.split_length", rp.split_length, "Random Prosody segment length t in frames"),
      PMVC_KEY("rp.rate_low", rp.rate_low, "lower bound of the stretch rate (> 0.5)"),
      PMVC_KEY("rp.rate_high", rp.rate_high, "upper bound of the stretch rate"),
      PMVC_KEY("model.content_dim", model.content_dim, "content channels C"),
      PMVC_KEY("model.prosody_dim", model.prosody_dim, "prosody channels P"),
      PMVC_KEY("model.encoder_conv_layers", model.encoder_conv_layers, "encoder conv+IN blocks"),
      PMVC_KEY("model.encoder_channels", model.encoder_channels, "encoder conv width"),
      PMVC_KEY("model.encoder_kernel", model.encoder_kernel, "encoder kernel size (odd)"),
      PMVC_KEY("model.predictor_recurrent_layers", model.predictor_recurrent_layers, "bidirectional GRU layers in the content predictor"),
      PMVC_KEY("model.predictor_hidden", model.predictor_hidden, "predictor GRU width per direction"),
      PMVC_KEY("model.predictor_conv_layers", model.predictor_conv_layers, "predictor conv layers, last one projects to content_dim"),
      PMVC_KEY("model.predictor_channels", model.predictor_channels, "predictor conv width"),
      PMVC_KEY("model.predictor_kernel", model.predictor_kernel, "predictor kernel size (odd)"),
      PMVC_KEY("model.decoder_conv_layers", model.decoder_conv_layers, "decoder AdaIN blocks"),
      PMVC_KEY("model.decoder_channels", model.decoder_channels, "decoder width"),
      PMVC_KEY("model.decoder_kernel", model.decoder_kernel, "decoder kernel size (odd)"),
      PMVC_KEY("model.decoder_recurrent_hidden", model.decoder_recurrent_hidden, "decoder GRU width"),
      PMVC_KEY("model.grl_lambda", model.grl_lambda, "gradient reversal coefficient"),
      PMVC_KEY("model.in_epsilon", model.in_epsilon, "instance norm epsilon"),
      PMVC_KEY("model.leaky_slope", model.leaky_slope, "LeakyReLU negative slope"),
      PMVC_KEY("speaker.hidden", speaker.hidden, "speaker encoder GRU width"),
      PMVC_KEY("speaker.layers", speaker.layers, "speaker encoder GRU layers"),
      PMVC_KEY("speaker.embedding_dim", speaker.embedding_dim, "speaker embedding size d_s"),
      PMVC_KEY("speaker.speakers_per_batch", speaker_train.speakers_per_batch, "GE2E speakers per batch N"),
      PMVC_KEY("speaker.utterances_per_batch", speaker_train.utterances_per_batch, "GE2E utterances per speaker M"),
      PMVC_KEY("speaker.steps", speaker_train.steps, "speaker encoder pretraining steps"),
      PMVC_KEY("speaker.learning_rate", speaker_train.learning_rate, "speaker encoder Adam learning rate"),
      PMVC_KEY("speaker.max_grad_norm", speaker_train.max_grad_norm, "speaker encoder gradient clip (<= 0 disables)"),
      PMVC_KEY("train.batch_size", train.batch_size, "utterances per step"),
      PMVC_KEY("train.total_steps", train.total_steps, "optimizer steps"),
      PMVC_KEY("train.learning_rate", train.adam.learning_rate, "Adam learning rate"),
      PMVC_KEY("train.lr_final_fraction", train.lr_final_fraction, "learning rate at the last step relative to the first (linear ramp; 1 = constant)"),
      PMVC_KEY("train.adam_beta1", train.adam.beta1, "Adam beta1"),
      PMVC_KEY("train.adam_beta2", train.adam.beta2, "Adam beta2"),
      PMVC_KEY("train.adam_epsilon", train.adam.epsilon, "Adam epsilon"),
      PMVC_KEY("train.max_grad_norm", train.adam.max_grad_norm, "global gradient clip (<= 0 disables)"),
      PMVC_KEY("train.log_interval", train.log_interval, "steps between loss log lines"),
      PMVC_KEY("train.checkpoint_interval", train.checkpoint_interval, "steps between checkpoints"),
      PMVC_KEY("train.speaker_reference_utterances", train.speaker_reference_utterances, "utterances averaged per speaker embedding"),
      PMVC_KEY("loss.alpha", loss.alpha, "weight of the similarity loss"),
      PMVC_KEY("loss.beta", loss.beta, "weight of the adversarial loss"),
      PMVC_KEY("loss.sim_delta", sim_delta, "floor on the content cosine in the similarity ratio"),
      PMVC_KEY("data.num_test_speakers", num_test_speakers, "held-out speakers for zero-shot evaluation"),
      PMVC_KEY("eval.probe_utterances", eval.probe_utterances, "utterances probed for content leakage (half seen, half unseen)"),
      PMVC_KEY("eval.conversion_speakers", eval.conversion_speakers, "speakers in the all-pairs conversion test"),
      PMVC_KEY("eval.reference_utterances", eval.reference_utterances, "target utterances averaged for detection scoring"),
      PMVC_KEY("eval.export_per_speaker", eval.export_per_speaker, "utterances per speaker in export-latents"),
      PMVC_KEY("eval.griffin_lim_iterations", eval.griffin_lim_iterations, "Griffin-Lim iterations for WAV output"),
      PMVC_KEY("eval.partitions", eval.partitions, "content/prosody splits trained by sweep"),
      PMVC_KEY("seed", seed, "root seed; every random stream derives from it"),
  };
  return keys;
}

#undef PMVC_KEY

const KeyDef* FindKey(const std::string& name) {
  for (const auto& k : Registry()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

void Flatten(const Json& j, const std::string& prefix, PmvcConfig& config,
             const std::string& origin) {
  for (const auto& [key, value] : j.items()) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      Flatten(value, name, config, origin);
      continue;
    }
    const KeyDef* def = FindKey(name);
    if (def == nullptr) throw ConfigurationError(origin + ": unknown config key '" + name + "'");
    def->set(config, value);
  }
}

}  // namespace

void PmvcConfig::Validate() const {
  frontend.Validate();
  window_policy().Validate();
  rp.Validate();
  model_config().Validate();
  speaker_config().Validate();
  train.Validate();
  loss.Validate();
  if (!(sim_delta > 0.0)) throw ConfigurationError("loss.sim_delta must be > 0");
  if (num_test_speakers < 0) throw ConfigurationError("data.num_test_speakers must be >= 0");
  if (speaker_train.speakers_per_batch < 2 || speaker_train.utterances_per_batch < 2) {
    throw ConfigurationError("speaker batches need >= 2 speakers and >= 2 utterances");
  }
  if (speaker_train.steps < 1 || !(speaker_train.learning_rate > 0.0)) {
    throw ConfigurationError("speaker.steps and speaker.learning_rate must be positive");
  }
  if (eval.probe_utterances < 2 || eval.conversion_speakers < 2 || eval.reference_utterances < 1 ||
      eval.export_per_speaker < 1 || eval.griffin_lim_iterations < 1) {
    throw ConfigurationError("eval.* counts out of range");
  }
}

FrameWindowPolicy PmvcConfig::window_policy() const {
  FrameWindowPolicy p = DefaultWindowPolicy(frontend, target_frames);
  p.crop_rule = ParseCropRule(crop_rule);
  return p;
}

ModelConfig PmvcConfig::model_config() const {
  ModelConfig m = model;
  m.mel_bins = frontend.mel_bins;
  m.speaker_dim = speaker.embedding_dim;
  return m;
}

SpeakerEncoderConfig PmvcConfig::speaker_config() const {
  SpeakerEncoderConfig s = speaker;
  s.mel_bins = frontend.mel_bins;
  return s;
}

SpeakerPretrainConfig PmvcConfig::speaker_pretrain() const {
  SpeakerPretrainConfig p;
  p.speakers_per_batch = speaker_train.speakers_per_batch;
  p.utterances_per_batch = speaker_train.utterances_per_batch;
  p.steps = speaker_train.steps;
  p.adam.learning_rate = speaker_train.learning_rate;
  p.adam.max_grad_norm = speaker_train.max_grad_norm;
  p.seed = DeriveSeed(seed, HashString("speaker"));
  return p;
}

LossOptions PmvcConfig::loss_options() const {
  LossOptions o;
  o.weights = loss;
  o.sim_delta = sim_delta;
  return o;
}

TrainOptions PmvcConfig::train_options() const {
  TrainOptions o;
  o.model = model_config();
  o.train = train;
  o.train.seed = seed;
  o.rp = rp;
  o.loss = loss_options();
  o.frame_params = frontend;
  return o;
}

const std::vector<ConfigKey>& ConfigKeys() {
  static const std::vector<ConfigKey> keys = [] {
    const PmvcConfig defaults;
    std::vector<ConfigKey> out;
    for (const auto& k : Registry()) out.push_back({k.name, k.help, k.get(defaults).dump()});
    return out;
  }();
  return keys;
}

std::string ConfigHelpText() {
  std::ostringstream out;
  out << "Config keys (JSON file nested by dots, or --set key=value):\n";
  for (const auto& k : ConfigKeys()) {
    out << "  " << k.name << " = " << k.default_value << "\n      " << k.help << "\n";
  }
  return out.str();
}

PmvcConfig ParseConfig(const std::string& json_text, const std::string& origin) {
  const Json j = internal::ParseJson(json_text, origin);
  if (!j.is_object()) throw ConfigurationError(origin + ": top level must be a JSON object");
  PmvcConfig config;
  Flatten(j, "", config, origin);
  return config;
}

PmvcConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file: " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return ParseConfig(text, path.string());
}

void ApplyOverride(PmvcConfig& config, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigurationError("override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  const KeyDef* def = FindKey(key);
  if (def == nullptr) throw ConfigurationError("unknown config key '" + key + "'");
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  def->set(config, value);
}

std::string DumpConfig(const PmvcConfig& config) {
  Json root = Json::object();
  for (const auto& k : Registry()) {
    Json* node = &root;
    std::string rest = k.name;
    for (size_t dot; (dot = rest.find('.')) != std::string::npos; rest = rest.substr(dot + 1)) {
      node = &(*node)[rest.substr(0, dot)];
    }
    (*node)[rest] = k.get(config);
  }
  return root.dump(2) + "\n";
}

void SaveConfig(const std::filesystem::path& path, const PmvcConfig& config) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write config: " + path.string());
  out << DumpConfig(config);
}

}  // namespace pmvc
