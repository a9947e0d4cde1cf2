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

#ifndef PMVC_LAYERS_H_
#define PMVC_LAYERS_H_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pmvc/autograd.h"
#include "pmvc/rng.h"
#include "pmvc/tensor.h"

namespace pmvc {

// Which sub-network owns a parameter.
enum class ParamGroup { kEncoder, kDecoder, kPredictor, kSpeaker };

std::string ParamGroupName(ParamGroup group);

template <typename S>
struct Parameter {
  std::string name;
  ParamGroup group = ParamGroup::kEncoder;
  Matrix<S> value;
};

// Ordered, named parameter tensors. Indices double as tape keys.
template <typename S>
class ParameterStore {
 public:
  int Add(std::string name, ParamGroup group, const MatrixD& init) {
    params_.push_back({std::move(name), group, init.template cast<S>()});
    return static_cast<int>(params_.size()) - 1;
  }

  Var<S> Get(Tape<S>& tape, int index) const {
    return tape.Param(index, params_[index].value);
  }

  size_t size() const { return params_.size(); }
  Parameter<S>& operator[](size_t i) { return params_[i]; }
  const Parameter<S>& operator[](size_t i) const { return params_[i]; }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  int Find(const std::string& name) const {
    for (size_t i = 0; i < params_.size(); ++i) {
      if (params_[i].name == name) return static_cast<int>(i);
    }
    return -1;
  }

  size_t NumElements() const {
    size_t n = 0;
    for (const auto& p : params_) n += static_cast<size_t>(p.value.size());
    return n;
  }

  size_t NumElements(ParamGroup group) const {
    size_t n = 0;
    for (const auto& p : params_) {
      if (p.group == group) n += static_cast<size_t>(p.value.size());
    }
    return n;
  }

  template <typename T>
  ParameterStore<T> Cast() const {
    ParameterStore<T> out;
    for (const auto& p : params_) out.Add(p.name, p.group, p.value.template cast<double>());
    return out;
  }

 private:
  std::vector<Parameter<S>> params_;
};

// Glorot-uniform initialization.
MatrixD GlorotUniform(int rows, int cols, int fan_in, int fan_out, Rng& rng);
// Uniform in [-bound, bound].
MatrixD UniformInit(int rows, int cols, double bound, Rng& rng);

// y = x W + b. W: in x out.
struct LinearLayer {
  int weight = -1;
  int bias = -1;
  int in = 0;
  int out = 0;

  template <typename S>
  static LinearLayer Create(ParameterStore<S>& store, const std::string& name,
                            ParamGroup group, int in, int out, Rng& rng,
                            double bias_init = 0.0) {
    LinearLayer l;
    l.in = in;
    l.out = out;
    l.weight = store.Add(name + ".weight", group, GlorotUniform(in, out, in, out, rng));
    l.bias = store.Add(name + ".bias", group, MatrixD::Constant(1, out, bias_init));
    return l;
  }

  template <typename S>
  Var<S> Forward(const ParameterStore<S>& store, Tape<S>& tape, Var<S> x) const {
    return ag::AddRow(ag::MatMul(x, store.Get(tape, weight)), store.Get(tape, bias));
  }
};

// Same-padded temporal convolution.
struct ConvLayer {
  int weight = -1;
  int bias = -1;
  int in = 0;
  int out = 0;
  int kernel = 1;

  template <typename S>
  static ConvLayer Create(ParameterStore<S>& store, const std::string& name,
                          ParamGroup group, int in, int out, int kernel, Rng& rng) {
    ConvLayer l;
    l.in = in;
    l.out = out;
    l.kernel = kernel;
    l.weight = store.Add(name + ".weight", group,
                         GlorotUniform(kernel * in, out, kernel * in, out, rng));
    l.bias = store.Add(name + ".bias", group, MatrixD::Zero(1, out));
    return l;
  }

  template <typename S>
  Var<S> Forward(const ParameterStore<S>& store, Tape<S>& tape, Var<S> x) const {
    return ag::Conv1d(x, store.Get(tape, weight), store.Get(tape, bias), kernel);
  }
};

// Single-direction GRU (gate order r|z|n).
struct GruLayer {
  int input_weight = -1;
  int input_bias = -1;
  int hidden_weight = -1;
  int hidden_bias = -1;
  int in = 0;
  int hidden = 0;

  template <typename S>
  static GruLayer Create(ParameterStore<S>& store, const std::string& name,
                         ParamGroup group, int in, int hidden, Rng& rng) {
    GruLayer l;
    l.in = in;
    l.hidden = hidden;
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    l.input_weight = store.Add(name + ".wi", group, UniformInit(in, 3 * hidden, bound, rng));
    l.input_bias = store.Add(name + ".bi", group, UniformInit(1, 3 * hidden, bound, rng));
    l.hidden_weight = store.Add(name + ".wh", group, UniformInit(hidden, 3 * hidden, bound, rng));
    l.hidden_bias = store.Add(name + ".bh", group, UniformInit(1, 3 * hidden, bound, rng));
    return l;
  }

  template <typename S>
  Var<S> Forward(const ParameterStore<S>& store, Tape<S>& tape, Var<S> x,
                 bool reverse = false) const {
    Var<S> gx = ag::AddRow(ag::MatMul(x, store.Get(tape, input_weight)),
                           store.Get(tape, input_bias));
    return ag::GruRecurrence(gx, store.Get(tape, hidden_weight),
                             store.Get(tape, hidden_bias), reverse);
  }
};

// Forward and backward GRUs with concatenated outputs (T x 2H).
struct BiGruLayer {
  GruLayer forward;
  GruLayer backward;

  template <typename S>
  static BiGruLayer Create(ParameterStore<S>& store, const std::string& name,
                           ParamGroup group, int in, int hidden, Rng& rng) {
    return {GruLayer::Create(store, name + ".fwd", group, in, hidden, rng),
            GruLayer::Create(store, name + ".bwd", group, in, hidden, rng)};
  }

  template <typename S>
  Var<S> Forward(const ParameterStore<S>& store, Tape<S>& tape, Var<S> x) const {
    return ag::ConcatCols<S>({forward.Forward(store, tape, x, false),
                              backward.Forward(store, tape, x, true)});
  }
};

}  // namespace pmvc

#endif  // PMVC_LAYERS_H_
