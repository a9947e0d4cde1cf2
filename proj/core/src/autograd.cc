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

#include "pmvc/autograd.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include "pmvc/error.h"

namespace pmvc {

template <typename S>
Var<S> Tape<S>::Constant(Mat value) {
  nodes_.push_back(Node{std::move(value), Mat(), false, nullptr});
  return Var<S>(this, static_cast<int>(nodes_.size()) - 1);
}

template <typename S>
Var<S> Tape<S>::Leaf(Mat value) {
  nodes_.push_back(Node{std::move(value), Mat(), grad_enabled_, nullptr});
  return Var<S>(this, static_cast<int>(nodes_.size()) - 1);
}

template <typename S>
Var<S> Tape<S>::Param(int key, const Mat& value) {
  auto it = param_nodes_.find(key);
  if (it != param_nodes_.end()) return Var<S>(this, it->second);
  Var<S> v = Leaf(value);
  param_nodes_.emplace(key, v.id());
  return v;
}

template <typename S>
Var<S> Tape<S>::Record(Mat value, std::initializer_list<Var<S>> inputs,
                       BackwardFn backward) {
  bool needs = false;
  if (grad_enabled_) {
    for (const Var<S>& in : inputs) needs = needs || nodes_[in.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), Mat(), needs,
                        needs ? std::move(backward) : BackwardFn()});
  return Var<S>(this, static_cast<int>(nodes_.size()) - 1);
}

template <typename S>
Var<S> Tape<S>::Record(Mat value, const std::vector<Var<S>>& inputs,
                       BackwardFn backward) {
  bool needs = false;
  if (grad_enabled_) {
    for (const Var<S>& in : inputs) needs = needs || nodes_[in.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), Mat(), needs,
                        needs ? std::move(backward) : BackwardFn()});
  return Var<S>(this, static_cast<int>(nodes_.size()) - 1);
}

template <typename S>
void Tape<S>::Backward(Var<S> root) {
  if (root.tape() != this) throw std::logic_error("backward on foreign tape");
  const Mat& v = nodes_[root.id()].value;
  if (v.rows() != 1 || v.cols() != 1) {
    throw std::logic_error("backward root must be a 1x1 node");
  }
  if (!nodes_[root.id()].requires_grad) return;
  nodes_[root.id()].grad = Mat::Ones(1, 1);
  for (int id = root.id(); id >= 0; --id) {
    Node& node = nodes_[id];
    if (!node.requires_grad || node.grad.size() == 0 || !node.backward) continue;
    node.backward(*this, id);
  }
}

template <typename S>
const Matrix<S>* Tape<S>::ParamGrad(int key) const {
  auto it = param_nodes_.find(key);
  if (it == param_nodes_.end()) return nullptr;
  const Node& node = nodes_[it->second];
  return node.grad.size() == 0 ? nullptr : &node.grad;
}

template <typename S>
Matrix<S> Tape<S>::GradOf(Var<S> v) const {
  const Node& node = nodes_[v.id()];
  if (node.grad.size() == 0) return Mat::Zero(node.value.rows(), node.value.cols());
  return node.grad;
}

namespace ag {
namespace {

template <typename S>
void CheckSameShape(const Var<S>& a, const Var<S>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError(std::string(op) + ": shape mismatch (" +
                          std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                          " vs " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()) + ")");
  }
}

template <typename S>
void CheckScalar(const Var<S>& a, const char* op) {
  if (a.rows() != 1 || a.cols() != 1) {
    throw ValidationError(std::string(op) + ": expected a 1x1 operand");
  }
}

}  // namespace

template <typename S>
Var<S> Add(Var<S> a, Var<S> b) {
  CheckSameShape(a, b, "Add");
  const int ia = a.id(), ib = b.id();
  return a.tape()->Record(a.value() + b.value(), {a, b},
                          [ia, ib](Tape<S>& t, int self) {
                            t.AddGrad(ia, t.grad(self));
                            t.AddGrad(ib, t.grad(self));
                          });
}

template <typename S>
Var<S> Sub(Var<S> a, Var<S> b) {
  CheckSameShape(a, b, "Sub");
  const int ia = a.id(), ib = b.id();
  return a.tape()->Record(a.value() - b.value(), {a, b},
                          [ia, ib](Tape<S>& t, int self) {
                            t.AddGrad(ia, t.grad(self));
                            t.AddGrad(ib, -t.grad(self));
                          });
}

template <typename S>
Var<S> Mul(Var<S> a, Var<S> b) {
  CheckSameShape(a, b, "Mul");
  const int ia = a.id(), ib = b.id();
  return a.tape()->Record(a.value().cwiseProduct(b.value()), {a, b},
                          [ia, ib](Tape<S>& t, int self) {
                            const auto& g = t.grad(self);
                            if (t.requires_grad(ia)) t.AddGrad(ia, g.cwiseProduct(t.value(ib)));
                            if (t.requires_grad(ib)) t.AddGrad(ib, g.cwiseProduct(t.value(ia)));
                          });
}

template <typename S>
Var<S> Scale(Var<S> a, S factor) {
  const int ia = a.id();
  return a.tape()->Record(a.value() * factor, {a},
                          [ia, factor](Tape<S>& t, int self) {
                            t.AddGrad(ia, t.grad(self) * factor);
                          });
}

template <typename S>
Var<S> AddRow(Var<S> x, Var<S> row) {
  if (row.rows() != 1 || row.cols() != x.cols()) {
    throw ValidationError("AddRow: row must be 1 x " + std::to_string(x.cols()));
  }
  const int ix = x.id(), ir = row.id();
  Matrix<S> out = x.value();
  out.rowwise() += row.value().row(0);
  return x.tape()->Record(std::move(out), {x, row}, [ix, ir](Tape<S>& t, int self) {
    const auto& g = t.grad(self);
    t.AddGrad(ix, g);
    if (t.requires_grad(ir)) t.AddGrad(ir, g.colwise().sum());
  });
}

template <typename S>
Var<S> MulRow(Var<S> x, Var<S> row) {
  if (row.rows() != 1 || row.cols() != x.cols()) {
    throw ValidationError("MulRow: row must be 1 x " + std::to_string(x.cols()));
  }
  const int ix = x.id(), ir = row.id();
  Matrix<S> out = x.value().array().rowwise() * row.value().row(0).array();
  return x.tape()->Record(std::move(out), {x, row}, [ix, ir](Tape<S>& t, int self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(ix)) {
      Matrix<S> gx = g.array().rowwise() * t.value(ir).row(0).array();
      t.AddGrad(ix, gx);
    }
    if (t.requires_grad(ir)) {
      t.AddGrad(ir, g.cwiseProduct(t.value(ix)).colwise().sum());
    }
  });
}

template <typename S>
Var<S> MulScalar(Var<S> x, Var<S> s) {
  CheckScalar(s, "MulScalar");
  const int ix = x.id(), is = s.id();
  return x.tape()->Record(x.value() * s.scalar(), {x, s}, [ix, is](Tape<S>& t, int self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(ix)) t.AddGrad(ix, g * t.value(is)(0, 0));
    if (t.requires_grad(is)) {
      Matrix<S> gs(1, 1);
      gs(0, 0) = g.cwiseProduct(t.value(ix)).sum();
      t.AddGrad(is, gs);
    }
  });
}

template <typename S>
Var<S> AddScalar(Var<S> x, Var<S> s) {
  CheckScalar(s, "AddScalar");
  const int ix = x.id(), is = s.id();
  Matrix<S> out = x.value().array() + s.scalar();
  return x.tape()->Record(std::move(out), {x, s}, [ix, is](Tape<S>& t, int self) {
    const auto& g = t.grad(self);
    t.AddGrad(ix, g);
    if (t.requires_grad(is)) {
      Matrix<S> gs(1, 1);
      gs(0, 0) = g.sum();
      t.AddGrad(is, gs);
    }
  });
}

template <typename S>
Var<S> Div(Var<S> a, Var<S> b) {
  CheckScalar(a, "Div");
  CheckScalar(b, "Div");
  const int ia = a.id(), ib = b.id();
  Matrix<S> out(1, 1);
  out(0, 0) = a.scalar() / b.scalar();
  return a.tape()->Record(std::move(out), {a, b}, [ia, ib](Tape<S>& t, int self) {
    const S g = t.grad(self)(0, 0);
    const S av = t.value(ia)(0, 0);
    const S bv = t.value(ib)(0, 0);
    Matrix<S> ga(1, 1), gb(1, 1);
    ga(0, 0) = g / bv;
    gb(0, 0) = -g * av / (bv * bv);
    t.AddGrad(ia, ga);
    t.AddGrad(ib, gb);
  });
}

template <typename S>
Var<S> MatMul(Var<S> a, Var<S> b) {
  if (a.cols() != b.rows()) {
    throw ValidationError("MatMul: inner dimensions differ (" +
                          std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()) + ")");
  }
  const int ia = a.id(), ib = b.id();
  Matrix<S> out = a.value() * b.value();
  return a.tape()->Record(std::move(out), {a, b}, [ia, ib](Tape<S>& t, int self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(ia)) t.AddGrad(ia, g * t.value(ib).transpose());
    if (t.requires_grad(ib)) t.AddGrad(ib, t.value(ia).transpose() * g);
  });
}

template <typename S>
Var<S> MatMulNT(Var<S> a, Var<S> b) {
  if (a.cols() != b.cols()) {
    throw ValidationError("MatMulNT: column counts differ");
  }
  const int ia = a.id(), ib = b.id();
  Matrix<S> out = a.value() * b.value().transpose();
  return a.tape()->Record(std::move(out), {a, b}, [ia, ib](Tape<S>& t, int self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(ia)) t.AddGrad(ia, g * t.value(ib));
    if (t.requires_grad(ib)) t.AddGrad(ib, g.transpose() * t.value(ia));
  });
}

template <typename S>
Var<S> ConcatCols(const std::vector<Var<S>>& parts) {
  if (parts.empty()) throw ValidationError("ConcatCols: no inputs");
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw ValidationError("ConcatCols: row counts differ");
    cols += p.cols();
  }
  Matrix<S> out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> spans;
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    spans.emplace_back(p.id(), offset);
    offset += p.cols();
  }
  return parts[0].tape()->Record(std::move(out), parts, [spans](Tape<S>& t, int self) {
    const auto& g = t.grad(self);
    for (const auto& [id, off] : spans) {
      if (t.requires_grad(id)) t.AddGrad(id, g.middleCols(off, t.value(id).cols()));
    }
  });
}

template <typename S>
Var<S> ConcatRows(const std::vector<Var<S>>& parts) {
  if (parts.empty()) throw ValidationError("ConcatRows: no inputs");
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw ValidationError("ConcatRows: column counts differ");
    rows += p.rows();
  }
  Matrix<S> out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> spans;
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.middleRows(offset, p.rows()) = p.value();
    spans.emplace_back(p.id(), offset);
    offset += p.rows();
  }
  return parts[0].tape()->Record(std::move(out), parts, [spans](Tape<S>& t, int self) {
    const auto& g = t.grad(self);
    for (const auto& [id, off] : spans) {
      if (t.requires_grad(id)) t.AddGrad(id, g.middleRows(off, t.value(id).rows()));
    }
  });
}

template <typename S>
Var<S> SliceCols(Var<S> x, int start, int count) {
  if (start < 0 || count < 0 || start + count > x.cols()) {
    throw ValidationError("SliceCols: range out of bounds");
  }
  const int ix = x.id();
  const Eigen::Index rows = x.rows(), cols = x.cols();
  Matrix<S> out = x.value().middleCols(start, count);
  return x.tape()->Record(std::move(out), {x},
                          [ix, start, count, rows, cols](Tape<S>& t, int self) {
                            Matrix<S> gx = Matrix<S>::Zero(rows, cols);
                            gx.middleCols(start, count) = t.grad(self);
                            t.AddGrad(ix, gx);
                          });
}

template <typename S>
Var<S> SliceRows(Var<S> x, int start, int count) {
  if (start < 0 || count < 0 || start + count > x.rows()) {
    throw ValidationError("SliceRows: range out of bounds");
  }
  const int ix = x.id();
  const Eigen::Index rows = x.rows(), cols = x.cols();
  Matrix<S> out = x.value().middleRows(start, count);
  return x.tape()->Record(std::move(out), {x},
                          [ix, start, count, rows, cols](Tape<S>& t, int self) {
                            Matrix<S> gx = Matrix<S>::Zero(rows, cols);
                            gx.middleRows(start, count) = t.grad(self);
                            t.AddGrad(ix, gx);
                          });
}

template <typename S>
Var<S> TileRows(Var<S> row, int times) {
  if (row.rows() != 1) throw ValidationError("TileRows: input must be a single row");
  const int ir = row.id();
  Matrix<S> out = row.value().replicate(times, 1);
  return row.tape()->Record(std::move(out), {row}, [ir](Tape<S>& t, int self) {
    t.AddGrad(ir, t.grad(self).colwise().sum());
  });
}

template <typename S>
Var<S> TileCols(Var<S> col, int times) {
  if (col.cols() != 1) throw ValidationError("TileCols: input must be a single column");
  const int ic = col.id();
  Matrix<S> out = col.value().replicate(1, times);
  return col.tape()->Record(std::move(out), {col}, [ic](Tape<S>& t, int self) {
    t.AddGrad(ic, t.grad(self).rowwise().sum());
  });
}

template <typename S>
Var<S> MeanRows(Var<S> x) {
  const int ix = x.id();
  const Eigen::Index rows = x.rows();
  Matrix<S> out = x.value().colwise().mean();
  return x.tape()->Record(std::move(out), {x}, [ix, rows](Tape<S>& t, int self) {
    Matrix<S> gx = t.grad(self).replicate(rows, 1) / static_cast<S>(rows);
    t.AddGrad(ix, gx);
  });
}

template <typename S>
Var<S> LeakyRelu(Var<S> x, S slope) {
  const int ix = x.id();
  Matrix<S> out = x.value().unaryExpr([slope](S v) { return v > S(0) ? v : slope * v; });
  return x.tape()->Record(std::move(out), {x}, [ix, slope](Tape<S>& t, int self) {
    const auto& xv = t.value(ix);
    Matrix<S> gx = t.grad(self).binaryExpr(
        xv, [slope](S g, S v) { return v > S(0) ? g : slope * g; });
    t.AddGrad(ix, gx);
  });
}

template <typename S>
Var<S> Tanh(Var<S> x) {
  const int ix = x.id();
  Matrix<S> out = x.value().array().tanh();
  return x.tape()->Record(std::move(out), {x}, [ix](Tape<S>& t, int self) {
    const auto& y = t.value(self);
    Matrix<S> gx = t.grad(self).array() * (S(1) - y.array().square());
    t.AddGrad(ix, gx);
  });
}

template <typename S>
Var<S> Sigmoid(Var<S> x) {
  const int ix = x.id();
  Matrix<S> out = x.value().unaryExpr([](S v) { return S(1) / (S(1) + std::exp(-v)); });
  return x.tape()->Record(std::move(out), {x}, [ix](Tape<S>& t, int self) {
    const auto& y = t.value(self);
    Matrix<S> gx = t.grad(self).array() * y.array() * (S(1) - y.array());
    t.AddGrad(ix, gx);
  });
}

template <typename S>
Var<S> Conv1d(Var<S> x, Var<S> weight, Var<S> bias, int kernel) {
  if (kernel < 1 || kernel % 2 == 0) {
    throw ConfigurationError("Conv1d: kernel size must be odd, got " + std::to_string(kernel));
  }
  const auto frames = static_cast<int>(x.rows());
  const auto in_ch = static_cast<int>(x.cols());
  if (weight.rows() != static_cast<Eigen::Index>(kernel) * in_ch) {
    throw ConfigurationError("Conv1d: weight expects " +
                             std::to_string(weight.rows() / kernel) +
                             " input channels, got " + std::to_string(in_ch));
  }
  if (bias.rows() != 1 || bias.cols() != weight.cols()) {
    throw ConfigurationError("Conv1d: bias shape mismatch");
  }
  const int pad = kernel / 2;
  auto cols = std::make_shared<Matrix<S>>(Matrix<S>::Zero(frames, kernel * in_ch));
  const auto& xv = x.value();
  for (int t = 0; t < frames; ++t) {
    for (int k = 0; k < kernel; ++k) {
      const int src = t + k - pad;
      if (src < 0 || src >= frames) continue;
      cols->row(t).segment(k * in_ch, in_ch) = xv.row(src);
    }
  }
  Matrix<S> out = (*cols) * weight.value();
  out.rowwise() += bias.value().row(0);
  const int ix = x.id(), iw = weight.id(), ib = bias.id();
  return x.tape()->Record(
      std::move(out), {x, weight, bias},
      [ix, iw, ib, cols, kernel, in_ch, pad, frames](Tape<S>& t, int self) {
        const auto& g = t.grad(self);
        if (t.requires_grad(iw)) t.AddGrad(iw, cols->transpose() * g);
        if (t.requires_grad(ib)) t.AddGrad(ib, g.colwise().sum());
        if (t.requires_grad(ix)) {
          const Matrix<S> gcols = g * t.value(iw).transpose();
          Matrix<S> gx = Matrix<S>::Zero(frames, in_ch);
          for (int tt = 0; tt < frames; ++tt) {
            for (int k = 0; k < kernel; ++k) {
              const int src = tt + k - pad;
              if (src < 0 || src >= frames) continue;
              gx.row(src) += gcols.row(tt).segment(k * in_ch, in_ch);
            }
          }
          t.AddGrad(ix, gx);
        }
      });
}

template <typename S>
Var<S> InstanceNorm(Var<S> x, S eps) {
  const int ix = x.id();
  const auto& xv = x.value();
  const auto frames = static_cast<S>(xv.rows());
  const Matrix<S> mean = xv.colwise().mean();
  Matrix<S> centered = xv.rowwise() - mean.row(0);
  const Matrix<S> var = centered.array().square().colwise().sum() / frames;
  const Matrix<S> inv_std = (var.array() + eps).rsqrt();
  Matrix<S> out = centered.array().rowwise() * inv_std.row(0).array();
  return x.tape()->Record(std::move(out), {x}, [ix, inv_std, frames](Tape<S>& t, int self) {
    const auto& g = t.grad(self);
    const auto& y = t.value(self);
    const Matrix<S> g_mean = g.colwise().sum() / frames;
    const Matrix<S> gy_mean = g.cwiseProduct(y).colwise().sum() / frames;
    Matrix<S> gx = g;
    gx.rowwise() -= g_mean.row(0);
    gx -= (y.array().rowwise() * gy_mean.row(0).array()).matrix();
    gx = gx.array().rowwise() * inv_std.row(0).array();
    t.AddGrad(ix, gx);
  });
}

template <typename S>
Var<S> GruRecurrence(Var<S> gx, Var<S> wh, Var<S> bh, bool reverse) {
  const auto hidden = static_cast<int>(wh.rows());
  const auto frames = static_cast<int>(gx.rows());
  if (wh.cols() != 3 * hidden || gx.cols() != 3 * hidden || bh.rows() != 1 ||
      bh.cols() != 3 * hidden) {
    throw ConfigurationError("GruRecurrence: gate shapes do not match hidden size " +
                             std::to_string(hidden));
  }
  struct Cache {
    Matrix<S> r, z, n, hn, prev;  // per-step rows
  };
  auto cache = std::make_shared<Cache>();
  cache->r.resize(frames, hidden);
  cache->z.resize(frames, hidden);
  cache->n.resize(frames, hidden);
  cache->hn.resize(frames, hidden);
  cache->prev.resize(frames, hidden);
  Matrix<S> out(frames, hidden);
  Matrix<S> h = Matrix<S>::Zero(1, hidden);
  const auto& gxv = gx.value();
  const auto& whv = wh.value();
  const auto& bhv = bh.value();
  auto sigmoid = [](S v) { return S(1) / (S(1) + std::exp(-v)); };
  for (int step = 0; step < frames; ++step) {
    const int t = reverse ? frames - 1 - step : step;
    const Matrix<S> gh = h * whv + bhv;
    for (int j = 0; j < hidden; ++j) {
      const S r = sigmoid(gxv(t, j) + gh(0, j));
      const S z = sigmoid(gxv(t, hidden + j) + gh(0, hidden + j));
      const S hn = gh(0, 2 * hidden + j);
      const S n = std::tanh(gxv(t, 2 * hidden + j) + r * hn);
      cache->r(t, j) = r;
      cache->z(t, j) = z;
      cache->n(t, j) = n;
      cache->hn(t, j) = hn;
      cache->prev(t, j) = h(0, j);
      out(t, j) = (S(1) - z) * n + z * h(0, j);
    }
    h = out.row(t);
  }
  const int igx = gx.id(), iwh = wh.id(), ibh = bh.id();
  return gx.tape()->Record(
      std::move(out), {gx, wh, bh},
      [igx, iwh, ibh, cache, hidden, frames, reverse](Tape<S>& t, int self) {
        const auto& g = t.grad(self);
        const auto& whv = t.value(iwh);
        Matrix<S> dgx(frames, 3 * hidden);
        Matrix<S> dwh = Matrix<S>::Zero(hidden, 3 * hidden);
        Matrix<S> dbh = Matrix<S>::Zero(1, 3 * hidden);
        Matrix<S> dh_next = Matrix<S>::Zero(1, hidden);
        Matrix<S> dgh(1, 3 * hidden);
        for (int step = frames - 1; step >= 0; --step) {
          const int tt = reverse ? frames - 1 - step : step;
          Matrix<S> dh_prev(1, hidden);
          for (int j = 0; j < hidden; ++j) {
            const S dh = g(tt, j) + dh_next(0, j);
            const S r = cache->r(tt, j), z = cache->z(tt, j), n = cache->n(tt, j);
            const S prev = cache->prev(tt, j);
            const S dn = dh * (S(1) - z);
            const S dz = dh * (prev - n);
            const S dan = dn * (S(1) - n * n);
            const S dr = dan * cache->hn(tt, j);
            const S dar = dr * r * (S(1) - r);
            const S daz = dz * z * (S(1) - z);
            dgx(tt, j) = dar;
            dgx(tt, hidden + j) = daz;
            dgx(tt, 2 * hidden + j) = dan;
            dgh(0, j) = dar;
            dgh(0, hidden + j) = daz;
            dgh(0, 2 * hidden + j) = dan * r;
            dh_prev(0, j) = dh * z;
          }
          dwh.noalias() += cache->prev.row(tt).transpose() * dgh;
          dbh += dgh;
          dh_prev.noalias() += dgh * whv.transpose();
          dh_next = dh_prev;
        }
        t.AddGrad(igx, dgx);
        if (t.requires_grad(iwh)) t.AddGrad(iwh, dwh);
        if (t.requires_grad(ibh)) t.AddGrad(ibh, dbh);
      });
}

template <typename S>
Var<S> GradientReversal(Var<S> x, S lambda) {
  const int ix = x.id();
  return x.tape()->Record(x.value(), {x}, [ix, lambda](Tape<S>& t, int self) {
    t.AddGrad(ix, t.grad(self) * (-lambda));
  });
}

template <typename S>
Var<S> Detach(Var<S> x) {
  return x.tape()->Constant(x.value());
}

template <typename S>
Var<S> NormalizeRows(Var<S> x, S eps) {
  const int ix = x.id();
  const Matrix<S> norms = x.value().rowwise().norm();
  Matrix<S> out = x.value();
  for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r) /= (norms(r, 0) + eps);
  return x.tape()->Record(std::move(out), {x}, [ix, norms, eps](Tape<S>& t, int self) {
    const auto& g = t.grad(self);
    const auto& xv = t.value(ix);
    Matrix<S> gx(xv.rows(), xv.cols());
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
      const S n = norms(r, 0);
      const S d = n + eps;
      gx.row(r) = g.row(r) / d;
      if (n > S(0)) {
        const S proj = xv.row(r).dot(g.row(r));
        gx.row(r) -= xv.row(r) * (proj / (n * d * d));
      }
    }
    t.AddGrad(ix, gx);
  });
}

template <typename S>
Var<S> RowDot(Var<S> a, Var<S> b) {
  CheckSameShape(a, b, "RowDot");
  const int ia = a.id(), ib = b.id();
  Matrix<S> out = a.value().cwiseProduct(b.value()).rowwise().sum();
  return a.tape()->Record(std::move(out), {a, b}, [ia, ib](Tape<S>& t, int self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(ia)) {
      Matrix<S> ga = t.value(ib).array().colwise() * g.col(0).array();
      t.AddGrad(ia, ga);
    }
    if (t.requires_grad(ib)) {
      Matrix<S> gb = t.value(ia).array().colwise() * g.col(0).array();
      t.AddGrad(ib, gb);
    }
  });
}

template <typename S>
Var<S> MeanSquaredError(Var<S> a, Var<S> b) {
  CheckSameShape(a, b, "MeanSquaredError");
  const int ia = a.id(), ib = b.id();
  const auto count = static_cast<S>(a.value().size());
  Matrix<S> out(1, 1);
  out(0, 0) = (a.value() - b.value()).squaredNorm() / count;
  return a.tape()->Record(std::move(out), {a, b}, [ia, ib, count](Tape<S>& t, int self) {
    const S g = t.grad(self)(0, 0);
    const Matrix<S> diff = (t.value(ia) - t.value(ib)) * (S(2) * g / count);
    t.AddGrad(ia, diff);
    t.AddGrad(ib, -diff);
  });
}

template <typename S>
Var<S> CosineSimilarity(Var<S> a, Var<S> b, S eps) {
  CheckSameShape(a, b, "CosineSimilarity");
  const int ia = a.id(), ib = b.id();
  const S dot = a.value().cwiseProduct(b.value()).sum();
  const S na = a.value().norm();
  const S nb = b.value().norm();
  const bool degenerate = !(na > S(0)) || !(nb > S(0));
  const S denom = na * nb + eps;
  Matrix<S> out(1, 1);
  out(0, 0) = degenerate ? S(0) : dot / denom;
  return a.tape()->Record(
      std::move(out), {a, b},
      [ia, ib, dot, na, nb, denom, degenerate](Tape<S>& t, int self) {
        if (degenerate) return;
        const S g = t.grad(self)(0, 0);
        const auto& av = t.value(ia);
        const auto& bv = t.value(ib);
        if (t.requires_grad(ia)) {
          t.AddGrad(ia, (bv / denom - av * (dot * nb / (na * denom * denom))) * g);
        }
        if (t.requires_grad(ib)) {
          t.AddGrad(ib, (av / denom - bv * (dot * na / (nb * denom * denom))) * g);
        }
      });
}

template <typename S>
Var<S> ClampMin(Var<S> x, S floor) {
  const int ix = x.id();
  Matrix<S> out = x.value().cwiseMax(floor);
  return x.tape()->Record(std::move(out), {x}, [ix, floor](Tape<S>& t, int self) {
    Matrix<S> gx = t.grad(self).binaryExpr(
        t.value(ix), [floor](S g, S v) { return v > floor ? g : S(0); });
    t.AddGrad(ix, gx);
  });
}

template <typename S>
Var<S> SoftmaxCrossEntropy(Var<S> logits, const std::vector<int>& labels) {
  const auto rows = logits.rows();
  if (static_cast<Eigen::Index>(labels.size()) != rows) {
    throw ValidationError("SoftmaxCrossEntropy: label count mismatch");
  }
  const auto& lv = logits.value();
  Matrix<S> probs(rows, lv.cols());
  S loss = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (labels[r] < 0 || labels[r] >= lv.cols()) {
      throw ValidationError("SoftmaxCrossEntropy: label out of range");
    }
    const S peak = lv.row(r).maxCoeff();
    const Matrix<S> shifted = (lv.row(r).array() - peak).exp();
    const S total = shifted.sum();
    probs.row(r) = shifted / total;
    loss += std::log(total) + peak - lv(r, labels[r]);
  }
  Matrix<S> out(1, 1);
  out(0, 0) = loss / static_cast<S>(rows);
  const int il = logits.id();
  return logits.tape()->Record(std::move(out), {logits},
                               [il, probs, labels, rows](Tape<S>& t, int self) {
                                 const S g = t.grad(self)(0, 0) / static_cast<S>(rows);
                                 Matrix<S> gl = probs;
                                 for (Eigen::Index r = 0; r < rows; ++r) gl(r, labels[r]) -= S(1);
                                 t.AddGrad(il, gl * g);
                               });
}

#define PMVC_INSTANTIATE_AG(S)                                                 \
  template Var<S> Add(Var<S>, Var<S>);                                         \
  template Var<S> Sub(Var<S>, Var<S>);                                         \
  template Var<S> Mul(Var<S>, Var<S>);                                         \
  template Var<S> Scale(Var<S>, S);                                            \
  template Var<S> AddRow(Var<S>, Var<S>);                                      \
  template Var<S> MulRow(Var<S>, Var<S>);                                      \
  template Var<S> MulScalar(Var<S>, Var<S>);                                   \
  template Var<S> AddScalar(Var<S>, Var<S>);                                   \
  template Var<S> Div(Var<S>, Var<S>);                                         \
  template Var<S> MatMul(Var<S>, Var<S>);                                      \
  template Var<S> MatMulNT(Var<S>, Var<S>);                                    \
  template Var<S> ConcatCols(const std::vector<Var<S>>&);                      \
  template Var<S> ConcatRows(const std::vector<Var<S>>&);                      \
  template Var<S> SliceCols(Var<S>, int, int);                                 \
  template Var<S> SliceRows(Var<S>, int, int);                                 \
  template Var<S> TileRows(Var<S>, int);                                       \
  template Var<S> TileCols(Var<S>, int);                                       \
  template Var<S> MeanRows(Var<S>);                                            \
  template Var<S> LeakyRelu(Var<S>, S);                                        \
  template Var<S> Tanh(Var<S>);                                                \
  template Var<S> Sigmoid(Var<S>);                                             \
  template Var<S> Conv1d(Var<S>, Var<S>, Var<S>, int);                         \
  template Var<S> InstanceNorm(Var<S>, S);                                     \
  template Var<S> GruRecurrence(Var<S>, Var<S>, Var<S>, bool);                 \
  template Var<S> GradientReversal(Var<S>, S);                                 \
  template Var<S> Detach(Var<S>);                                              \
  template Var<S> NormalizeRows(Var<S>, S);                                    \
  template Var<S> RowDot(Var<S>, Var<S>);                                      \
  template Var<S> MeanSquaredError(Var<S>, Var<S>);                            \
  template Var<S> CosineSimilarity(Var<S>, Var<S>, S);                         \
  template Var<S> ClampMin(Var<S>, S);                                         \
  template Var<S> SoftmaxCrossEntropy(Var<S>, const std::vector<int>&);

PMVC_INSTANTIATE_AG(float)
PMVC_INSTANTIATE_AG(double)
#undef PMVC_INSTANTIATE_AG

}  // namespace ag

template class Tape<float>;
template class Tape<double>;

}  // namespace pmvc
