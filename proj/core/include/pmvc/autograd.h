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

#ifndef PMVC_AUTOGRAD_H_
#define PMVC_AUTOGRAD_H_

// Minimal reverse-mode differentiation over 2-D row-major matrices.
//
// A Tape records every operation of one forward pass. Var is a lightweight
// handle (tape pointer + node id). Calling Tape::Backward on a 1x1 node
// propagates gradients to every node that requires them; parameter leaves
// keep their gradient for the caller to read with ParamGrad().
//
// Instantiated for float (training) and double (gradient checks).

#include <functional>
#include <unordered_map>
#include <vector>

#include "pmvc/tensor.h"

namespace pmvc {

template <typename S>
class Tape;

template <typename S>
class Var {
 public:
  Var() = default;
  Var(Tape<S>* tape, int id) : tape_(tape), id_(id) {}

  const Matrix<S>& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  // Value of a 1x1 node.
  S scalar() const { return value()(0, 0); }

  Tape<S>* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape<S>* tape_ = nullptr;
  int id_ = -1;
};

template <typename S>
class Tape {
 public:
  using Mat = Matrix<S>;
  using BackwardFn = std::function<void(Tape&, int)>;

  // When gradients are disabled every node is created as a constant.
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<S> Constant(Mat value);
  // A leaf that receives a gradient (inputs of gradient checks).
  Var<S> Leaf(Mat value);
  // Parameter leaf keyed by `key`; repeated calls with the same key return
  // the same node so gradients from every use accumulate.
  Var<S> Param(int key, const Mat& value);

  // Records an op node. `backward` is only kept when some input requires a
  // gradient.
  Var<S> Record(Mat value, std::initializer_list<Var<S>> inputs,
                BackwardFn backward);
  Var<S> Record(Mat value, const std::vector<Var<S>>& inputs,
                BackwardFn backward);

  void Backward(Var<S> root);

  const Mat& value(int id) const { return nodes_[id].value; }
  const Mat& grad(int id) const { return nodes_[id].grad; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  bool has_grad(int id) const { return nodes_[id].grad.size() > 0; }

  template <typename Derived>
  void AddGrad(int id, const Eigen::MatrixBase<Derived>& g) {
    Node& node = nodes_[id];
    if (!node.requires_grad) return;
    if (node.grad.size() == 0) {
      node.grad = g;
    } else {
      node.grad += g;
    }
  }

  // Gradient of a parameter leaf after Backward(); nullptr if the parameter
  // was not used or received no gradient.
  const Mat* ParamGrad(int key) const;
  // Gradient of any node (e.g. a Leaf) after Backward().
  Mat GradOf(Var<S> v) const;

  size_t size() const { return nodes_.size(); }
  bool grad_enabled() const { return grad_enabled_; }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  bool grad_enabled_;
  std::vector<Node> nodes_;
  std::unordered_map<int, int> param_nodes_;
};

template <typename S>
const Matrix<S>& Var<S>::value() const {
  return tape_->value(id_);
}

namespace ag {

template <typename S> Var<S> Add(Var<S> a, Var<S> b);
template <typename S> Var<S> Sub(Var<S> a, Var<S> b);
template <typename S> Var<S> Mul(Var<S> a, Var<S> b);
template <typename S> Var<S> Scale(Var<S> a, S factor);
// x (R x C) + row (1 x C) broadcast over rows.
template <typename S> Var<S> AddRow(Var<S> x, Var<S> row);
// x (R x C) .* row (1 x C) broadcast over rows.
template <typename S> Var<S> MulRow(Var<S> x, Var<S> row);
// x * s and x + s for a 1x1 node s.
template <typename S> Var<S> MulScalar(Var<S> x, Var<S> s);
template <typename S> Var<S> AddScalar(Var<S> x, Var<S> s);
// a / b for 1x1 nodes.
template <typename S> Var<S> Div(Var<S> a, Var<S> b);

template <typename S> Var<S> MatMul(Var<S> a, Var<S> b);
// a * b^T
template <typename S> Var<S> MatMulNT(Var<S> a, Var<S> b);

template <typename S> Var<S> ConcatCols(const std::vector<Var<S>>& parts);
template <typename S> Var<S> ConcatRows(const std::vector<Var<S>>& parts);
template <typename S> Var<S> SliceCols(Var<S> x, int start, int count);
template <typename S> Var<S> SliceRows(Var<S> x, int start, int count);
// Repeats a 1 x C row `times` times.
template <typename S> Var<S> TileRows(Var<S> row, int times);
// Repeats an R x 1 column `times` times.
template <typename S> Var<S> TileCols(Var<S> col, int times);
// 1 x C column means.
template <typename S> Var<S> MeanRows(Var<S> x);

template <typename S> Var<S> LeakyRelu(Var<S> x, S slope);
template <typename S> Var<S> Tanh(Var<S> x);
template <typename S> Var<S> Sigmoid(Var<S> x);

// Same-padded 1-D convolution over time. x: T x Cin, weight: (k*Cin) x Cout
// laid out tap-major (row k*Cin + c multiplies input channel c at offset
// k - k/2), bias: 1 x Cout. Kernel size must be odd.
template <typename S>
Var<S> Conv1d(Var<S> x, Var<S> weight, Var<S> bias, int kernel);

// Per-column normalization over time without affine parameters:
// (x - mean) / sqrt(var + eps), population variance.
template <typename S> Var<S> InstanceNorm(Var<S> x, S eps);

// GRU recurrence given precomputed input projections gx = x Wi + bi
// (T x 3H, gate order r|z|n), hidden weights wh (H x 3H) and bias bh
// (1 x 3H). Returns all hidden states (T x H), h_0 = 0. With `reverse`
// the sequence is consumed from the last frame; output rows stay aligned
// with input frames.
template <typename S>
Var<S> GruRecurrence(Var<S> gx, Var<S> wh, Var<S> bh, bool reverse);

// Identity forward; backward multiplies the upstream gradient by -lambda.
template <typename S> Var<S> GradientReversal(Var<S> x, S lambda);
// Identity forward; blocks the gradient.
template <typename S> Var<S> Detach(Var<S> x);

template <typename S> Var<S> NormalizeRows(Var<S> x, S eps);
// Row-wise dot product, R x 1.
template <typename S> Var<S> RowDot(Var<S> a, Var<S> b);

// Mean over all elements of (a - b)^2, 1x1.
template <typename S> Var<S> MeanSquaredError(Var<S> a, Var<S> b);
// Cosine similarity of the flattened matrices, a.b / (|a||b| + eps). A zero
// norm input yields 0 with zero gradient.
template <typename S> Var<S> CosineSimilarity(Var<S> a, Var<S> b, S eps);
template <typename S> Var<S> ClampMin(Var<S> x, S floor);
// Mean over rows of -log softmax(logits)[label].
template <typename S>
Var<S> SoftmaxCrossEntropy(Var<S> logits, const std::vector<int>& labels);

}  // namespace ag
}  // namespace pmvc

#endif  // PMVC_AUTOGRAD_H_
