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

#include "pmvc/optimizer.h"

#include <cmath>
#include <stdexcept>

#include "pmvc/error.h"

namespace pmvc {

void AdamConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw ConfigurationError("learning rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigurationError("adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigurationError("adam epsilon must be > 0");
}

template <typename S>
Adam<S>::Adam(const AdamConfig& config, const ParameterStore<S>& params) : config_(config) {
  config_.Validate();
  for (const auto& p : params) {
    first_moment_.push_back(Matrix<S>::Zero(p.value.rows(), p.value.cols()));
    second_moment_.push_back(Matrix<S>::Zero(p.value.rows(), p.value.cols()));
  }
}

template <typename S>
void Adam<S>::Step(ParameterStore<S>& params, const std::vector<Matrix<S>>& grads) {
  if (grads.size() != params.size() || first_moment_.size() != params.size()) {
    throw std::logic_error("adam: gradient list does not match parameters");
  }
  double scale = 1.0;
  if (config_.max_grad_norm > 0.0) {
    double sq = 0.0;
    for (const auto& g : grads) {
      if (g.size() > 0) sq += static_cast<double>(g.squaredNorm());
    }
    const double norm = std::sqrt(sq);
    if (norm > config_.max_grad_norm) scale = config_.max_grad_norm / norm;
  }
  ++steps_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const S step_size = static_cast<S>(config_.learning_rate / correction1);
  const S root_correction2 = static_cast<S>(std::sqrt(correction2));
  const S eps = static_cast<S>(config_.epsilon);
  for (size_t i = 0; i < params.size(); ++i) {
    if (grads[i].size() == 0) continue;
    const Matrix<S> g = grads[i] * static_cast<S>(scale);
    first_moment_[i] = first_moment_[i] * static_cast<S>(b1) + g * static_cast<S>(1.0 - b1);
    second_moment_[i] = second_moment_[i] * static_cast<S>(b2) +
                        g.cwiseProduct(g) * static_cast<S>(1.0 - b2);
    const Matrix<S> denom = (second_moment_[i].array().sqrt() / root_correction2 + eps).matrix();
    params[i].value -= (first_moment_[i].array() / denom.array()).matrix() * step_size;
  }
}

template <typename S>
std::vector<Matrix<S>> CollectGrads(const Tape<S>& tape, const ParameterStore<S>& params) {
  std::vector<Matrix<S>> grads;
  grads.reserve(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    const Matrix<S>* g = tape.ParamGrad(static_cast<int>(i));
    if (g != nullptr) {
      grads.push_back(*g);
    } else {
      grads.push_back(Matrix<S>::Zero(params[i].value.rows(), params[i].value.cols()));
    }
  }
  return grads;
}

template <typename S>
void AccumulateGrads(std::vector<Matrix<S>>* acc, const std::vector<Matrix<S>>& grads) {
  if (acc->empty()) {
    *acc = grads;
    return;
  }
  for (size_t i = 0; i < grads.size(); ++i) (*acc)[i] += grads[i];
}

template class Adam<float>;
template class Adam<double>;
template std::vector<Matrix<float>> CollectGrads(const Tape<float>&, const ParameterStore<float>&);
template std::vector<Matrix<double>> CollectGrads(const Tape<double>&, const ParameterStore<double>&);
template void AccumulateGrads(std::vector<Matrix<float>>*, const std::vector<Matrix<float>>&);
template void AccumulateGrads(std::vector<Matrix<double>>*, const std::vector<Matrix<double>>&);

}  // namespace pmvc
