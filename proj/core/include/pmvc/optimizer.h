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

#ifndef PMVC_OPTIMIZER_H_
#define PMVC_OPTIMIZER_H_

#include <cstdint>
#include <vector>

#include "pmvc/layers.h"

namespace pmvc {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double epsilon = 1e-9;
  // Global L2 gradient norm clip; <= 0 disables clipping.
  double max_grad_norm = 0.0;

  void Validate() const;
};

// Adam with bias correction over every tensor of a ParameterStore.
template <typename S>
class Adam {
 public:
  Adam(const AdamConfig& config, const ParameterStore<S>& params);

  // grads[i] pairs with params[i]; an empty matrix leaves that tensor
  // untouched for this step.
  void Step(ParameterStore<S>& params, const std::vector<Matrix<S>>& grads);

  int64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }

 private:
  AdamConfig config_;
  std::vector<Matrix<S>> first_moment_;
  std::vector<Matrix<S>> second_moment_;
  int64_t steps_ = 0;
};

// Collects per-parameter gradients from a tape after Backward(); tensors
// without a gradient become zero matrices of the parameter's shape.
template <typename S>
std::vector<Matrix<S>> CollectGrads(const Tape<S>& tape, const ParameterStore<S>& params);

// acc += grads (elementwise, tensor by tensor).
template <typename S>
void AccumulateGrads(std::vector<Matrix<S>>* acc, const std::vector<Matrix<S>>& grads);

}  // namespace pmvc

#endif  // PMVC_OPTIMIZER_H_
