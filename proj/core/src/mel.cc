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

#include "pmvc/mel.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "pmvc/error.h"
#include "pmvc/rng.h"

namespace pmvc {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

constexpr double kMinLogHz = 1000.0;
constexpr double kLinearScale = 200.0 / 3.0;
constexpr double kMinLogMel = kMinLogHz / kLinearScale;
const double kLogStep = std::log(6.4) / 27.0;

constexpr char kMelMagic[8] = {'P', 'M', 'V', 'C', 'M', 'E', 'L', '1'};

class RealFft {
 public:
  explicit RealFft(int size) : size_(size) {
    fft_.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  }

  void Forward(const std::vector<double>& in,
               std::vector<std::complex<double>>* out) {
    fft_.fwd(*out, in);
  }

  void Inverse(const std::vector<std::complex<double>>& in,
               std::vector<double>* out) {
    fft_.inv(*out, in, size_);
  }

 private:
  int size_;
  Eigen::FFT<double> fft_;
};

// Frames `signal` into T rows of one-sided complex spectra.
std::vector<std::vector<std::complex<double>>> Stft(
    const std::vector<double>& signal, const FrameParams& p,
    const std::vector<double>& window) {
  const int frames = NumFrames(p, signal.size());
  const int offset = (p.fft_size - p.win_length) / 2;
  RealFft fft(p.fft_size);
  std::vector<std::vector<std::complex<double>>> out(frames);
  std::vector<double> buffer(p.fft_size);
  for (int t = 0; t < frames; ++t) {
    std::fill(buffer.begin(), buffer.end(), 0.0);
    const size_t start = static_cast<size_t>(t) * p.hop_length;
    for (int i = 0; i < p.win_length; ++i) {
      buffer[offset + i] = signal[start + i] * window[i];
    }
    fft.Forward(buffer, &out[t]);
  }
  return out;
}

std::vector<double> Istft(
    const std::vector<std::vector<std::complex<double>>>& spectra,
    const FrameParams& p, const std::vector<double>& window) {
  const int frames = static_cast<int>(spectra.size());
  const size_t length =
      static_cast<size_t>(frames - 1) * p.hop_length + p.win_length;
  const int offset = (p.fft_size - p.win_length) / 2;
  std::vector<double> signal(length, 0.0);
  std::vector<double> norm(length, 0.0);
  RealFft fft(p.fft_size);
  std::vector<double> buffer;
  for (int t = 0; t < frames; ++t) {
    fft.Inverse(spectra[t], &buffer);
    const size_t start = static_cast<size_t>(t) * p.hop_length;
    for (int i = 0; i < p.win_length; ++i) {
      signal[start + i] += buffer[offset + i] * window[i];
      norm[start + i] += window[i] * window[i];
    }
  }
  for (size_t i = 0; i < length; ++i) {
    if (norm[i] > 1e-8) signal[i] /= norm[i];
  }
  return signal;
}

}  // namespace

void FrameParams::Validate() const {
  if (sample_rate <= 0) throw ValidationError("sample_rate must be positive");
  if (fft_size <= 0 || win_length <= 0 || hop_length <= 0) {
    throw ValidationError("fft_size, win_length and hop_length must be positive");
  }
  if (win_length > fft_size) {
    throw ValidationError("win_length must not exceed fft_size");
  }
  if (mel_bins <= 0) throw ValidationError("mel_bins must be positive");
  if (!(floor_epsilon > 0.0)) throw ValidationError("floor_epsilon must be positive");
  if (fmin < 0.0 || !(EffectiveFmax() > fmin) || EffectiveFmax() > 0.5 * sample_rate) {
    throw ValidationError("mel range must satisfy 0 <= fmin < fmax <= sample_rate/2");
  }
}

double HzToMel(double hz) {
  if (hz < kMinLogHz) return hz / kLinearScale;
  return kMinLogMel + std::log(hz / kMinLogHz) / kLogStep;
}

double MelToHz(double mel) {
  if (mel < kMinLogMel) return mel * kLinearScale;
  return kMinLogHz * std::exp((mel - kMinLogMel) * kLogStep);
}

MatrixD MelFilterbank(const FrameParams& p) {
  p.Validate();
  const int bins = p.fft_size / 2 + 1;
  const double mel_lo = HzToMel(p.fmin);
  const double mel_hi = HzToMel(p.EffectiveFmax());
  std::vector<double> edges(p.mel_bins + 2);
  for (int i = 0; i < p.mel_bins + 2; ++i) {
    edges[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * i / (p.mel_bins + 1));
  }
  MatrixD fb = MatrixD::Zero(p.mel_bins, bins);
  for (int m = 0; m < p.mel_bins; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    const double enorm = 2.0 / (right - left);
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * p.sample_rate / p.fft_size;
      const double lower = (f - left) / (center - left);
      const double upper = (right - f) / (right - center);
      fb(m, k) = std::max(0.0, std::min(lower, upper)) * enorm;
    }
  }
  return fb;
}

std::vector<double> HannWindow(int length) {
  std::vector<double> w(length);
  for (int i = 0; i < length; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / length);
  }
  return w;
}

int NumFrames(const FrameParams& p, size_t num_samples) {
  if (num_samples < static_cast<size_t>(p.win_length)) return 0;
  return 1 + static_cast<int>((num_samples - p.win_length) / p.hop_length);
}

MelSpectrogram ComputeMel(const AudioClip& clip, const FrameParams& params) {
  params.Validate();
  ValidateClip(clip);
  if (clip.sample_rate != params.sample_rate) {
    throw ValidationError("clip sample rate " + std::to_string(clip.sample_rate) +
                          " does not match analysis rate " +
                          std::to_string(params.sample_rate));
  }
  if (clip.size() < static_cast<size_t>(params.win_length)) {
    throw ValidationError("clip shorter than one analysis window");
  }
  const std::vector<double> signal(clip.samples.begin(), clip.samples.end());
  const auto window = HannWindow(params.win_length);
  const auto spectra = Stft(signal, params, window);
  const MatrixD fb = MelFilterbank(params);
  const int bins = params.fft_size / 2 + 1;
  MelSpectrogram spec;
  spec.params = params;
  spec.frames.resize(static_cast<Eigen::Index>(spectra.size()), params.mel_bins);
  Eigen::VectorXd power(bins);
  for (size_t t = 0; t < spectra.size(); ++t) {
    for (int k = 0; k < bins; ++k) power[k] = std::norm(spectra[t][k]);
    const Eigen::VectorXd mel = fb * power;
    for (int m = 0; m < params.mel_bins; ++m) {
      spec.frames(static_cast<Eigen::Index>(t), m) =
          static_cast<float>(std::log(mel[m] + params.floor_epsilon));
    }
  }
  return spec;
}

AudioClip InvertMel(const MelSpectrogram& spec, int iterations) {
  if (iterations < 1) throw ValidationError("griffin-lim iterations must be >= 1");
  const FrameParams& p = spec.params;
  p.Validate();
  if (spec.num_frames() < 1 || spec.num_bins() != p.mel_bins) {
    throw ValidationError("spectrogram shape does not match its frame params");
  }
  const MatrixD fb = MelFilterbank(p);
  const MatrixD inverse = fb.completeOrthogonalDecomposition().pseudoInverse();
  const int bins = p.fft_size / 2 + 1;
  const int frames = spec.num_frames();
  std::vector<std::vector<double>> magnitude(frames, std::vector<double>(bins));
  Eigen::VectorXd mel_power(p.mel_bins);
  for (int t = 0; t < frames; ++t) {
    for (int m = 0; m < p.mel_bins; ++m) {
      const double v = spec.log_scaled
                           ? std::exp(static_cast<double>(spec.frames(t, m))) - p.floor_epsilon
                           : static_cast<double>(spec.frames(t, m));
      mel_power[m] = std::max(0.0, v);
    }
    const Eigen::VectorXd linear = inverse * mel_power;
    for (int k = 0; k < bins; ++k) magnitude[t][k] = std::sqrt(std::max(0.0, linear[k]));
  }
  const auto window = HannWindow(p.win_length);
  std::vector<std::vector<std::complex<double>>> estimate(frames);
  for (int t = 0; t < frames; ++t) {
    estimate[t].assign(magnitude[t].begin(), magnitude[t].end());
  }
  std::vector<double> signal = Istft(estimate, p, window);
  for (int it = 0; it < iterations; ++it) {
    const auto rebuilt = Stft(signal, p, window);
    for (int t = 0; t < frames; ++t) {
      for (int k = 0; k < bins; ++k) {
        const double mag = std::abs(rebuilt[t][k]);
        estimate[t][k] = mag > 1e-12 ? rebuilt[t][k] * (magnitude[t][k] / mag)
                                     : std::complex<double>(magnitude[t][k], 0.0);
      }
    }
    signal = Istft(estimate, p, window);
  }
  AudioClip clip;
  clip.sample_rate = p.sample_rate;
  clip.samples.resize(signal.size());
  for (size_t i = 0; i < signal.size(); ++i) {
    clip.samples[i] = static_cast<float>(std::clamp(signal[i], -1.0, 1.0));
  }
  return clip;
}

void FrameWindowPolicy::Validate() const {
  if (target_frames <= 0) throw ValidationError("target_frames must be positive");
  if (!std::isfinite(pad_value)) throw ValidationError("pad_value must be finite");
}

double SilencePadValue(const FrameParams& params) {
  return std::log(params.floor_epsilon);
}

FrameWindowPolicy DefaultWindowPolicy(const FrameParams& params,
                                      int target_frames) {
  FrameWindowPolicy policy;
  policy.target_frames = target_frames;
  policy.pad_value = SilencePadValue(params);
  return policy;
}

CropRule ParseCropRule(const std::string& name) {
  if (name == "random_window") return CropRule::kRandomWindow;
  if (name == "left_window") return CropRule::kLeftWindow;
  throw ConfigurationError("unknown crop rule '" + name + "'");
}

std::string CropRuleName(CropRule rule) {
  return rule == CropRule::kRandomWindow ? "random_window" : "left_window";
}

MelSpectrogram FitFrames(const MelSpectrogram& spec,
                         const FrameWindowPolicy& policy, uint64_t seed) {
  policy.Validate();
  const int frames = spec.num_frames();
  const int target = policy.target_frames;
  MelSpectrogram out;
  out.params = spec.params;
  out.log_scaled = spec.log_scaled;
  if (frames == target) {
    out.frames = spec.frames;
  } else if (frames > target) {
    int start = 0;
    if (policy.crop_rule == CropRule::kRandomWindow) {
      Rng rng(seed);
      start = static_cast<int>(UniformIndex(rng, frames - target + 1));
    }
    out.frames = spec.frames.middleRows(start, target);
  } else {
    out.frames = MatrixF::Constant(target, spec.num_bins(),
                                   static_cast<float>(policy.pad_value));
    if (frames > 0) out.frames.topRows(frames) = spec.frames;
  }
  return out;
}

void WriteMel(const std::filesystem::path& path, const MelSpectrogram& spec) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  auto put_u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto put_f64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  out.write(kMelMagic, sizeof(kMelMagic));
  put_u32(static_cast<uint32_t>(spec.frames.rows()));
  put_u32(static_cast<uint32_t>(spec.frames.cols()));
  const FrameParams& p = spec.params;
  put_u32(static_cast<uint32_t>(p.sample_rate));
  put_u32(static_cast<uint32_t>(p.fft_size));
  put_u32(static_cast<uint32_t>(p.hop_length));
  put_u32(static_cast<uint32_t>(p.win_length));
  put_u32(static_cast<uint32_t>(p.mel_bins));
  put_f64(p.fmin);
  put_f64(p.fmax);
  put_f64(p.floor_epsilon);
  const char log_flag = spec.log_scaled ? 1 : 0;
  out.write(&log_flag, 1);
  out.write(reinterpret_cast<const char*>(spec.frames.data()),
            static_cast<std::streamsize>(spec.frames.size() * sizeof(float)));
  if (!out) throw IoError("failed writing " + path.string());
}

MelSpectrogram ReadMel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open mel file " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMelMagic, 8) != 0) {
    throw ValidationError(path.string() + ": not a PMVC mel file");
  }
  auto get_u32 = [&]() {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  auto get_f64 = [&]() {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  const uint32_t rows = get_u32();
  const uint32_t cols = get_u32();
  MelSpectrogram spec;
  spec.params.sample_rate = static_cast<int>(get_u32());
  spec.params.fft_size = static_cast<int>(get_u32());
  spec.params.hop_length = static_cast<int>(get_u32());
  spec.params.win_length = static_cast<int>(get_u32());
  spec.params.mel_bins = static_cast<int>(get_u32());
  spec.params.fmin = get_f64();
  spec.params.fmax = get_f64();
  spec.params.floor_epsilon = get_f64();
  char log_flag = 0;
  in.read(&log_flag, 1);
  if (!in) throw ValidationError(path.string() + ": truncated mel header");
  if (rows == 0 || cols == 0 || rows > (1u << 24) || cols > (1u << 16)) {
    throw ValidationError(path.string() + ": invalid mel shape");
  }
  spec.log_scaled = log_flag != 0;
  spec.frames.resize(rows, cols);
  in.read(reinterpret_cast<char*>(spec.frames.data()),
          static_cast<std::streamsize>(spec.frames.size() * sizeof(float)));
  if (!in) throw ValidationError(path.string() + ": truncated mel payload");
  if (!spec.frames.allFinite()) {
    throw ValidationError(path.string() + ": non-finite mel values");
  }
  return spec;
}

}  // namespace pmvc
