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

#include "pmvc/objectives.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "pmvc/error.h"

namespace pmvc {
namespace {

void CheckShapes(const MatrixD& a, const MatrixD& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError(std::string(what) + ": shape mismatch");
  }
}

double MeanSquared(const MatrixD& a, const MatrixD& b, const char* what) {
  CheckShapes(a, b, what);
  if (a.size() == 0) throw ValidationError(std::string(what) + ": empty input");
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

}  // namespace

void LossWeights::Validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) {
    throw ConfigurationError("loss weights alpha and beta must be >= 0");
  }
}

std::string LossBreakdown::ToLogLine(int64_t step) const {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "step=%lld recon=%.9g sim=%.9g adv=%.9g total=%.9g",
                static_cast<long long>(step), recon, sim, adv, total);
  return buf;
}

LossBreakdown LossBreakdown::FromLogLine(const std::string& line, int64_t* step) {
  LossBreakdown out;
  long long s = 0;
  if (std::sscanf(line.c_str(), "step=%lld recon=%lf sim=%lf adv=%lf total=%lf", &s,
                  &out.recon, &out.sim, &out.adv, &out.total) != 5) {
    throw ValidationError("malformed loss log line: " + line);
  }
  if (step != nullptr) *step = s;
  return out;
}

CosineResult CosineSim(const MatrixD& u, const MatrixD& v) {
  CheckShapes(u, v, "cosine_sim");
  const double nu = u.norm();
  const double nv = v.norm();
  if (!(nu > 0.0) || !(nv > 0.0)) return {0.0, true};
  return {u.cwiseProduct(v).sum() / (nu * nv + kCosineEps), false};
}

double SimLoss(const LatentFeature& original, const LatentFeature& augmented, double delta) {
  original.Validate();
  augmented.Validate();
  if (original.content_dim != augmented.content_dim ||
      original.prosody_dim != augmented.prosody_dim) {
    throw ValidationError("sim_loss: latents use different splits");
  }
  const double prosody = CosineSim(original.prosody(), augmented.prosody()).value;
  const double content = CosineSim(original.content(), augmented.content()).value;
  return prosody / std::max(content, delta);
}

double ReconLoss(const MatrixD& x, const MatrixD& x_hat, const MatrixD& x_res,
                 const MatrixD& x_hat_res) {
  return MeanSquared(x_hat, x, "recon_loss") + MeanSquared(x_hat_res, x_res, "recon_loss");
}

double AdvLoss(const MatrixD& predicted_x, const MatrixD& content_x,
               const MatrixD& predicted_res, const MatrixD& content_res) {
  return MeanSquared(predicted_x, content_x, "adv_loss") +
         MeanSquared(predicted_res, content_res, "adv_loss");
}

LossBreakdown TotalLoss(double recon, double sim, double adv, const LossWeights& weights) {
  weights.Validate();
  if (!std::isfinite(recon)) throw TrainingDivergenceError("recon", "reconstruction loss is not finite");
  if (!std::isfinite(sim)) throw TrainingDivergenceError("sim", "similarity loss is not finite");
  if (!std::isfinite(adv)) throw TrainingDivergenceError("adv", "adversarial loss is not finite");
  LossBreakdown out;
  out.recon = recon;
  out.sim = sim;
  out.adv = adv;
  out.total = recon + weights.alpha * sim + weights.beta * adv;
  return out;
}

namespace ag {

template <typename S>
Var<S> SimLoss(Var<S> content_x, Var<S> prosody_x, Var<S> content_res, Var<S> prosody_res,
               S delta) {
  const S eps = static_cast<S>(kCosineEps);
  Var<S> numerator = CosineSimilarity(prosody_x, prosody_res, eps);
  Var<S> denominator = ClampMin(CosineSimilarity(content_x, content_res, eps), delta);
  return Div(numerator, denominator);
}

template <typename S>
Var<S> ReconLoss(Var<S> x, Var<S> x_hat, Var<S> x_res, Var<S> x_hat_res) {
  return Add(MeanSquaredError(x_hat, x), MeanSquaredError(x_hat_res, x_res));
}

template <typename S>
Var<S> AdvLoss(Var<S> predicted_x, Var<S> content_x, Var<S> predicted_res, Var<S> content_res,
               bool detach_targets) {
  if (detach_targets) {
    content_x = Detach(content_x);
    content_res = Detach(content_res);
  }
  return Add(MeanSquaredError(predicted_x, content_x), MeanSquaredError(predicted_res, content_res));
}

template Var<float> SimLoss(Var<float>, Var<float>, Var<float>, Var<float>, float);
template Var<double> SimLoss(Var<double>, Var<double>, Var<double>, Var<double>, double);
template Var<float> ReconLoss(Var<float>, Var<float>, Var<float>, Var<float>);
template Var<double> ReconLoss(Var<double>, Var<double>, Var<double>, Var<double>);
template Var<float> AdvLoss(Var<float>, Var<float>, Var<float>, Var<float>, bool);
template Var<double> AdvLoss(Var<double>, Var<double>, Var<double>, Var<double>, bool);

}  // namespace ag
}  // namespace pmvc
