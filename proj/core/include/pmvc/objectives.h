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

#ifndef PMVC_OBJECTIVES_H_
#define PMVC_OBJECTIVES_H_

#include <cstdint>
#include <string>

#include "pmvc/autograd.h"
#include "pmvc/model.h"
#include "pmvc/tensor.h"

namespace pmvc {

inline constexpr double kCosineEps = 1e-8;
inline constexpr double kSimDenominatorFloor = 0.1;

struct LossWeights {
  double alpha = 0.5;
  double beta = 0.5;

  void Validate() const;
};

struct LossBreakdown {
  double recon = 0.0;
  double sim = 0.0;
  double adv = 0.0;
  double total = 0.0;

  // "step=<n> recon=<v> sim=<v> adv=<v> total=<v>" with 9 significant
  // digits.
  std::string ToLogLine(int64_t step) const;
  static LossBreakdown FromLogLine(const std::string& line, int64_t* step);
};

struct CosineResult {
  double value = 0.0;
  bool degenerate = false;  // one of the inputs had zero norm
};

// Cosine similarity of two equally shaped matrices flattened to vectors:
// u.v / (|u||v| + kCosineEps). Zero-norm input gives 0 and sets degenerate.
CosineResult CosineSim(const MatrixD& u, const MatrixD& v);

// G(P_x, P_res) / max(G(C_x, C_res), delta).
double SimLoss(const LatentFeature& original, const LatentFeature& augmented,
               double delta = kSimDenominatorFloor);

// mean((x_hat - x)^2) + mean((x_hat_res - x_res)^2).
double ReconLoss(const MatrixD& x, const MatrixD& x_hat, const MatrixD& x_res,
                 const MatrixD& x_hat_res);

// mean((C'_x - C_x)^2) + mean((C'_res - C_res)^2).
double AdvLoss(const MatrixD& predicted_x, const MatrixD& content_x,
               const MatrixD& predicted_res, const MatrixD& content_res);

// total = recon + alpha * sim + beta * adv. Throws TrainingDivergenceError
// naming the first non-finite component.
LossBreakdown TotalLoss(double recon, double sim, double adv, const LossWeights& weights);

// Differentiable counterparts used in training.
namespace ag {

template <typename S>
Var<S> SimLoss(Var<S> content_x, Var<S> prosody_x, Var<S> content_res, Var<S> prosody_res,
               S delta = static_cast<S>(kSimDenominatorFloor));

template <typename S>
Var<S> ReconLoss(Var<S> x, Var<S> x_hat, Var<S> x_res, Var<S> x_hat_res);

// Content targets are detached: only the predictions carry gradient.
template <typename S>
Var<S> AdvLoss(Var<S> predicted_x, Var<S> content_x, Var<S> predicted_res, Var<S> content_res,
               bool detach_targets = true);

}  // namespace ag
}  // namespace pmvc

#endif  // PMVC_OBJECTIVES_H_
