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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "pmvc/autograd.h"
#include "test_util.h"

namespace pmvc {
namespace {

using testing::MaxGradientError;
using testing::Project;
using testing::RandomMatrix;
using V = Var<double>;
using Vs = std::vector<V>;

constexpr double kTol = 1e-6;

class GradCheck : public ::testing::Test {
 protected:
  Rng rng_{2024};
  MatrixD R(int r, int c, double scale = 1.0) { return RandomMatrix(r, c, rng_, scale); }
};

TEST_F(GradCheck, Elementwise) {
  EXPECT_LT(MaxGradientError({R(3, 4), R(3, 4)},
                             [](Tape<double>& t, const Vs& v) {
                               return Project(t, ag::Mul(ag::Add(v[0], v[1]), ag::Sub(v[0], v[1])));
                             }),
            kTol);
  EXPECT_LT(MaxGradientError({R(3, 4)},
                             [](Tape<double>& t, const Vs& v) { return Project(t, ag::Scale(v[0], -2.5)); }),
            kTol);
}

TEST_F(GradCheck, Broadcasts) {
  EXPECT_LT(MaxGradientError({R(5, 3), R(1, 3), R(1, 3)},
                             [](Tape<double>& t, const Vs& v) {
                               return Project(t, ag::MulRow(ag::AddRow(v[0], v[1]), v[2]));
                             }),
            kTol);
  EXPECT_LT(MaxGradientError({R(5, 3), R(1, 1), R(1, 1)},
                             [](Tape<double>& t, const Vs& v) {
                               return Project(t, ag::AddScalar(ag::MulScalar(v[0], v[1]), v[2]));
                             }),
            kTol);
  MatrixD denom = R(1, 1);
  denom(0, 0) = 1.5 + std::abs(denom(0, 0));
  EXPECT_LT(MaxGradientError({R(1, 1), denom},
                             [](Tape<double>& t, const Vs& v) { return ag::Div(v[0], v[1]); }),
            kTol);
}

TEST_F(GradCheck, MatMuls) {
  EXPECT_LT(MaxGradientError({R(4, 3), R(3, 5)},
                             [](Tape<double>& t, const Vs& v) { return Project(t, ag::MatMul(v[0], v[1])); }),
            kTol);
  EXPECT_LT(MaxGradientError({R(4, 3), R(6, 3)},
                             [](Tape<double>& t, const Vs& v) { return Project(t, ag::MatMulNT(v[0], v[1])); }),
            kTol);
}

TEST_F(GradCheck, Reshaping) {
  EXPECT_LT(MaxGradientError({R(4, 2), R(4, 3)},
                             [](Tape<double>& t, const Vs& v) {
                               const V c = ag::ConcatCols(Vs{v[0], v[1]});
                               return Project(t, ag::SliceCols(c, 1, 3));
                             }),
            kTol);
  EXPECT_LT(MaxGradientError({R(2, 3), R(4, 3)},
                             [](Tape<double>& t, const Vs& v) {
                               const V c = ag::ConcatRows(Vs{v[0], v[1]});
                               return Project(t, ag::SliceRows(c, 1, 4));
                             }),
            kTol);
  EXPECT_LT(MaxGradientError({R(1, 3), R(4, 1)},
                             [](Tape<double>& t, const Vs& v) {
                               return Project(t, ag::Mul(ag::TileRows(v[0], 4), ag::TileCols(v[1], 3)));
                             }),
            kTol);
  EXPECT_LT(MaxGradientError({R(6, 3)},
                             [](Tape<double>& t, const Vs& v) { return Project(t, ag::MeanRows(v[0])); }),
            kTol);
}

TEST_F(GradCheck, Activations) {
  // Keep LeakyRelu inputs away from the kink.
  MatrixD x = R(5, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::abs(x.data()[i]) < 0.05) x.data()[i] = 0.3;
  }
  EXPECT_LT(MaxGradientError({x},
                             [](Tape<double>& t, const Vs& v) { return Project(t, ag::LeakyRelu(v[0], 0.2)); }),
            kTol);
  EXPECT_LT(MaxGradientError({R(5, 4)},
                             [](Tape<double>& t, const Vs& v) {
                               return Project(t, ag::Add(ag::Tanh(v[0]), ag::Sigmoid(v[0])));
                             }),
            kTol);
}

TEST_F(GradCheck, Conv1d) {
  for (int k : {1, 3, 5}) {
    EXPECT_LT(MaxGradientError({R(7, 3), R(k * 3, 4), R(1, 4)},
                               [k](Tape<double>& t, const Vs& v) {
                                 return Project(t, ag::Conv1d(v[0], v[1], v[2], k));
                               }),
              kTol)
        << "kernel " << k;
  }
}

TEST(Conv1d, MatchesDirectSum) {
  Rng rng(3);
  const int T = 6, cin = 2, cout = 3, k = 3;
  const MatrixD x = RandomMatrix(T, cin, rng);
  const MatrixD w = RandomMatrix(k * cin, cout, rng);
  const MatrixD b = RandomMatrix(1, cout, rng);
  Tape<double> tape(false);
  const MatrixD y = ag::Conv1d(tape.Constant(x), tape.Constant(w), tape.Constant(b), k).value();
  for (int t = 0; t < T; ++t) {
    for (int o = 0; o < cout; ++o) {
      double acc = b(0, o);
      for (int tap = 0; tap < k; ++tap) {
        const int src = t + tap - k / 2;
        if (src < 0 || src >= T) continue;
        for (int c = 0; c < cin; ++c) acc += x(src, c) * w(tap * cin + c, o);
      }
      EXPECT_NEAR(y(t, o), acc, 1e-12);
    }
  }
}

TEST_F(GradCheck, InstanceNorm) {
  EXPECT_LT(MaxGradientError({R(6, 3)},
                             [](Tape<double>& t, const Vs& v) { return Project(t, ag::InstanceNorm(v[0], 1e-5)); }),
            kTol);
}

TEST_F(GradCheck, GruRecurrence) {
  for (bool reverse : {false, true}) {
    EXPECT_LT(MaxGradientError({R(5, 6, 0.7), R(2, 6, 0.7), R(1, 6, 0.5)},
                               [reverse](Tape<double>& t, const Vs& v) {
                                 return Project(t, ag::GruRecurrence(v[0], v[1], v[2], reverse));
                               }),
              kTol);
  }
}

// Reference GRU step: r, z from sigmoid, n = tanh(gx_n + r * (h Wn + bn)),
// h' = (1 - z) * n + z * h.
TEST(GruRecurrence, MatchesReferenceStep) {
  Rng rng(12);
  const int T = 4, H = 3;
  const MatrixD gx = RandomMatrix(T, 3 * H, rng);
  const MatrixD wh = RandomMatrix(H, 3 * H, rng);
  const MatrixD bh = RandomMatrix(1, 3 * H, rng);
  Tape<double> tape(false);
  const MatrixD out =
      ag::GruRecurrence(tape.Constant(gx), tape.Constant(wh), tape.Constant(bh), false).value();
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(H);
  for (int t = 0; t < T; ++t) {
    const Eigen::RowVectorXd gh = h * wh + bh;
    Eigen::RowVectorXd next(H);
    for (int j = 0; j < H; ++j) {
      const double r = sig(gx(t, j) + gh(j));
      const double z = sig(gx(t, H + j) + gh(H + j));
      const double n = std::tanh(gx(t, 2 * H + j) + r * gh(2 * H + j));
      next(j) = (1.0 - z) * n + z * h(j);
    }
    h = next;
    for (int j = 0; j < H; ++j) EXPECT_NEAR(out(t, j), h(j), 1e-12);
  }
}

TEST_F(GradCheck, Normalization) {
  EXPECT_LT(MaxGradientError({R(4, 5)},
                             [](Tape<double>& t, const Vs& v) { return Project(t, ag::NormalizeRows(v[0], 1e-9)); }),
            kTol);
  EXPECT_LT(MaxGradientError({R(4, 5), R(4, 5)},
                             [](Tape<double>& t, const Vs& v) { return Project(t, ag::RowDot(v[0], v[1])); }),
            kTol);
}

TEST_F(GradCheck, Losses) {
  EXPECT_LT(MaxGradientError({R(3, 4), R(3, 4)},
                             [](Tape<double>& t, const Vs& v) { return ag::MeanSquaredError(v[0], v[1]); }),
            kTol);
  EXPECT_LT(MaxGradientError({R(3, 4), R(3, 4)},
                             [](Tape<double>& t, const Vs& v) { return ag::CosineSimilarity(v[0], v[1], 1e-8); }),
            kTol);
  EXPECT_LT(MaxGradientError({R(4, 5)},
                             [](Tape<double>& t, const Vs& v) {
                               return ag::SoftmaxCrossEntropy(v[0], std::vector<int>{0, 4, 2, 2});
                             }),
            kTol);
  MatrixD x = R(3, 3);
  x(0, 0) = -1.0;
  x(1, 1) = 2.0;
  EXPECT_LT(MaxGradientError({x},
                             [](Tape<double>& t, const Vs& v) { return Project(t, ag::ClampMin(v[0], 0.1)); }),
            kTol);
}

TEST(CosineSimilarity, ZeroInputIsZeroWithZeroGradient) {
  Tape<double> tape;
  const V a = tape.Leaf(MatrixD::Zero(2, 2));
  const V b = tape.Leaf(MatrixD::Ones(2, 2));
  const V c = ag::CosineSimilarity(a, b, 1e-8);
  EXPECT_EQ(c.scalar(), 0.0);
  tape.Backward(c);
  EXPECT_EQ(tape.GradOf(b).cwiseAbs().maxCoeff(), 0.0);
}

TEST(GradientReversal, ScalesGradient) {
  for (double lambda : {0.0, 0.7, 2.0, -1.0}) {
    Tape<double> tape;
    const V x = tape.Leaf(MatrixD::Constant(1, 1, 3.0));
    const V y = ag::GradientReversal(x, lambda);
    EXPECT_EQ(y.scalar(), 3.0);
    tape.Backward(ag::Mul(y, y));
    EXPECT_DOUBLE_EQ(tape.GradOf(x)(0, 0), -lambda * 6.0);
  }
}

TEST(Detach, BlocksGradient) {
  Tape<double> tape;
  const V x = tape.Leaf(MatrixD::Constant(1, 1, 2.0));
  const V y = ag::Add(ag::Mul(x, x), ag::Detach(ag::Mul(x, x)));
  EXPECT_EQ(y.scalar(), 8.0);
  tape.Backward(y);
  EXPECT_DOUBLE_EQ(tape.GradOf(x)(0, 0), 4.0);
}

TEST(Tape, ParamAccumulatesOverUses) {
  Tape<double> tape;
  const V p1 = tape.Param(7, MatrixD::Constant(1, 1, 3.0));
  const V p2 = tape.Param(7, MatrixD::Constant(1, 1, 3.0));
  EXPECT_EQ(p1.id(), p2.id());
  tape.Backward(ag::Add(ag::Scale(p1, 2.0), ag::Mul(p2, p2)));
  ASSERT_NE(tape.ParamGrad(7), nullptr);
  EXPECT_DOUBLE_EQ((*tape.ParamGrad(7))(0, 0), 8.0);
  EXPECT_EQ(tape.ParamGrad(8), nullptr);
}

TEST(Tape, DisabledGradientsRecordConstants) {
  Tape<double> tape(false);
  const V x = tape.Leaf(MatrixD::Ones(2, 2));
  const V y = ag::Scale(x, 3.0);
  EXPECT_FALSE(tape.requires_grad(y.id()));
  EXPECT_EQ(y.value()(1, 1), 3.0);
}

TEST(Autograd, FloatMatchesDouble) {
  Rng rng(1);
  const MatrixD a = RandomMatrix(4, 3, rng), w = RandomMatrix(3, 3, rng);
  Tape<double> td;
  Tape<float> tf;
  const double vd = ag::MeanSquaredError(ag::Tanh(ag::MatMul(td.Constant(a), td.Constant(w))),
                                         td.Constant(a)).scalar();
  const float vf = ag::MeanSquaredError(ag::Tanh(ag::MatMul(tf.Constant(a.cast<float>()),
                                                            tf.Constant(w.cast<float>()))),
                                        tf.Constant(a.cast<float>())).scalar();
  EXPECT_NEAR(vd, vf, 1e-5);
}

}  // namespace
}  // namespace pmvc
