// Copyright 2026 The Emformer Stream Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "emformer/autograd.h"
#include "emformer/errors.h"
#include "emformer/numkernel.h"
#include "test_util.h"

namespace emformer {
namespace {

using testing::naive_matmul;
using testing::naive_softmax;
using testing::rand_matrix;

TEST(Matmul, IdentityIsNeutral) {
  std::mt19937_64 rng(1);
  const Matrix m = rand_matrix(2, 3, rng);
  EXPECT_EQ(matmul(Matrix::identity(2), m), m);
}

TEST(Matmul, HandSum) {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{1}, {1}});
  EXPECT_EQ(matmul(a, b), Matrix::from_rows({{3}, {7}}));
}

TEST(Matmul, MatchesTripleLoop) {
  std::mt19937_64 rng(2);
  const Matrix a = rand_matrix(3, 4, rng);
  const Matrix b = rand_matrix(4, 2, rng);
  EXPECT_LE(max_abs_diff(matmul(a, b), naive_matmul(a, b)), 1e-12);
  EXPECT_LE(max_abs_diff(matmul_nt(a, testing::naive_transpose(b)), naive_matmul(a, b)), 1e-12);
  EXPECT_LE(max_abs_diff(matmul_tn(testing::naive_transpose(a), b), naive_matmul(a, b)), 1e-12);
}

TEST(Matmul, ShapeErrorNamesBothShapes) {
  try {
    matmul(Matrix(2, 3), Matrix(2, 3));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("2x3"), std::string::npos) << what;
  }
}

TEST(Softmax, UniformRow) {
  const Matrix out = softmax_rows(Matrix::from_rows({{2.5, 2.5, 2.5}}));
  for (double v : out.data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Softmax, MaskForcesSingleEntry) {
  Mask mask(1, 2);
  mask.set(0, 0, true);
  const Matrix out = softmax_rows(Matrix::from_rows({{0, 0}}), &mask);
  EXPECT_EQ(out(0, 0), 1.0);
  EXPECT_EQ(out(0, 1), 0.0);
}

TEST(Softmax, MatchesDirectEvaluation) {
  const Matrix m = Matrix::from_rows({{1, 2, 3}});
  EXPECT_LE(max_abs_diff(softmax_rows(m), naive_softmax(m)), 1e-12);
}

TEST(Softmax, RowsSumToOneAndMaskedEntriesAreZero) {
  std::mt19937_64 rng(3);
  const Matrix m = rand_matrix(6, 9, rng, 5.0);
  std::bernoulli_distribution coin(0.5);
  Mask mask(6, 9);
  for (std::size_t i = 0; i < 6; ++i) {
    mask.set(i, i, true);
    for (std::size_t j = 0; j < 9; ++j)
      if (coin(rng)) mask.set(i, j, true);
  }
  const Matrix out = softmax_rows(m, &mask);
  EXPECT_LE(max_abs_diff(out, naive_softmax(m, &mask)), 1e-12);
  for (std::size_t i = 0; i < 6; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 9; ++j) {
      if (!mask(i, j)) EXPECT_EQ(out(i, j), 0.0);
      sum += out(i, j);
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Softmax, LargeLogitsStayFinite) {
  const Matrix out = softmax_rows(Matrix::from_rows({{1000, 999, -1000}}));
  EXPECT_TRUE(all_finite(out));
  EXPECT_NEAR(out(0, 0), 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
}

TEST(Softmax, FullyMaskedRowThrows) {
  Mask mask(2, 2);
  mask.set(0, 0, true);
  EXPECT_THROW(softmax_rows(Matrix(2, 2), &mask), DegenerateMaskError);
}

TEST(Softmax, ShiftInvariance) {
  std::mt19937_64 rng(4);
  const Matrix m = rand_matrix(3, 5, rng);
  Matrix shifted = m;
  for (std::size_t i = 0; i < 3; ++i)
    for (double& v : shifted.row(i)) v += 7.0 * static_cast<double>(i + 1);
  EXPECT_LE(max_abs_diff(softmax_rows(m), softmax_rows(shifted)), 1e-14);
}

TEST(LogSoftmax, RowsLogSumExpToZero) {
  std::mt19937_64 rng(5);
  const Matrix lp = log_softmax_rows(rand_matrix(4, 6, rng, 10.0));
  for (std::size_t i = 0; i < 4; ++i) {
    double sum = 0.0;
    for (double v : lp.row(i)) sum += std::exp(v);
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(LayerNorm, ConstantRowCollapsesToZero) {
  const Matrix out =
      layer_norm(Matrix::from_rows({{3, 3, 3, 3}}), Matrix(1, 4, 1.0), Matrix(1, 4), kLayerNormEps);
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, TwoPointStandardization) {
  const Matrix out = layer_norm(Matrix::from_rows({{1, 3}}), Matrix(1, 2, 1.0), Matrix(1, 2), 0.0);
  EXPECT_NEAR(out(0, 0), -1.0, 1e-15);
  EXPECT_NEAR(out(0, 1), 1.0, 1e-15);
}

TEST(LayerNorm, RecomputedMoments) {
  std::mt19937_64 rng(6);
  const Matrix m = rand_matrix(1, 16, rng, 3.0);
  const Matrix out = layer_norm(m, Matrix(1, 16, 1.0), Matrix(1, 16), 1e-5);
  double mean = 0.0;
  for (double v : out.data()) mean += v;
  mean /= 16.0;
  double var = 0.0;
  for (double v : out.data()) var += (v - mean) * (v - mean);
  var /= 16.0;
  EXPECT_LT(std::abs(mean), 1e-9);
  EXPECT_NEAR(var, 1.0, 1e-6);
}

TEST(LayerNorm, GainAndBias) {
  const Matrix gain = Matrix::from_rows({{2, 3}});
  const Matrix bias = Matrix::from_rows({{1, -1}});
  const Matrix out = layer_norm(Matrix::from_rows({{1, 3}}), gain, bias, 0.0);
  EXPECT_NEAR(out(0, 0), -1.0, 1e-15);
  EXPECT_NEAR(out(0, 1), 2.0, 1e-15);
}

TEST(Linear, IdentityWeight) {
  std::mt19937_64 rng(7);
  const Matrix x = rand_matrix(3, 4, rng);
  EXPECT_EQ(linear(x, Param("w", Matrix::identity(4))), x);
}

TEST(Linear, HandValue) {
  const Param w("w", Matrix::from_rows({{2}, {3}}));
  EXPECT_EQ(linear(Matrix::from_rows({{1, 1}}), w), Matrix::from_rows({{5}}));
}

TEST(Linear, MatchesMatmulPlusBias) {
  std::mt19937_64 rng(8);
  const Matrix x = rand_matrix(5, 3, rng);
  const Param w("w", rand_matrix(3, 4, rng));
  const Param b("b", rand_matrix(1, 4, rng));
  Matrix expected = naive_matmul(x, w.value);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j) expected(i, j) += b.value(0, j);
  EXPECT_LE(max_abs_diff(linear(x, w, &b), expected), 1e-12);
  EXPECT_THROW(linear(x, Param("bad", Matrix(4, 4))), ShapeError);
}

TEST(Relu, Examples) {
  EXPECT_EQ(relu(Matrix::from_rows({{-1, 0, 2}})), Matrix::from_rows({{0, 0, 2}}));
  EXPECT_EQ(relu(Matrix::from_rows({{-1, -2}})), Matrix(1, 2));
  std::mt19937_64 rng(9);
  const Matrix m = rand_matrix(4, 4, rng);
  EXPECT_EQ(relu(relu(m)), relu(m));
}

TEST(MeanPool, Examples) {
  EXPECT_EQ(mean_pool_rows(Matrix::from_rows({{1, 2}})), (std::vector<double>{1, 2}));
  EXPECT_EQ(mean_pool_rows(Matrix::from_rows({{0}, {2}})), (std::vector<double>{1}));
  std::mt19937_64 rng(10);
  const Matrix m = rand_matrix(7, 3, rng);
  const auto pooled = mean_pool_rows(m);
  for (std::size_t j = 0; j < 3; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < 7; ++i) sum += m(i, j);
    EXPECT_NEAR(pooled[j], sum / 7.0, 1e-15);
  }
  EXPECT_THROW(mean_pool_rows(Matrix(0, 3)), ShapeError);
}

TEST(Kernels, Deterministic) {
  std::mt19937_64 a(11);
  std::mt19937_64 b(11);
  const Matrix x = rand_matrix(5, 5, a);
  const Matrix y = rand_matrix(5, 5, b);
  ASSERT_EQ(x, y);
  EXPECT_EQ(softmax_rows(matmul(x, x)), softmax_rows(matmul(y, y)));
}

TEST(Concat, RowsColsAndSlices) {
  const Matrix a = Matrix::from_rows({{1, 2}});
  const Matrix b = Matrix::from_rows({{3, 4}, {5, 6}});
  const Matrix* rows[] = {&a, &b};
  const Matrix stacked = concat_rows(rows);
  EXPECT_EQ(stacked, Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}}));
  EXPECT_EQ(slice_rows(stacked, 1, 3), b);
  const Matrix* cols[] = {&b, &b};
  EXPECT_EQ(slice_cols(concat_cols(cols), 2, 4), b);
  const std::size_t order[] = {2, 0};
  EXPECT_EQ(gather_rows(stacked, order), Matrix::from_rows({{5, 6}, {1, 2}}));
}

// ---- reverse mode ----

TEST(Backward, LinearSumGradIsXTransposeOnes) {
  std::mt19937_64 rng(12);
  const Matrix x = rand_matrix(3, 4, rng);
  Param w("w", rand_matrix(4, 2, rng));
  Tape tape;
  const Var loss = ag::sum(ag::matmul(tape.constant(x), tape.param(w)));
  const Gradients grads = tape.backward(loss);
  const Matrix expected = naive_matmul(testing::naive_transpose(x), Matrix(3, 2, 1.0));
  EXPECT_LE(max_abs_diff(grads.at(&w), expected), 1e-12);
}

TEST(Backward, ConstantLossGivesZeroGrads) {
  Param w("w", Matrix(2, 2, 1.0));
  Param unused("u", Matrix(1, 3, 1.0));
  Tape tape;
  const Var loss = ag::sum(ag::scale(ag::matmul(tape.constant(Matrix(1, 2)), tape.param(w)), 0.0));
  Param* params[] = {&w, &unused};
  apply_gradients(params, tape.backward(loss));
  EXPECT_EQ(w.grad, Matrix(2, 2));
  EXPECT_EQ(unused.grad, Matrix(1, 3));
}

TEST(Backward, WithoutForwardThrows) {
  Tape tape;
  EXPECT_THROW(tape.backward(Var{}), std::logic_error);
  Tape other;
  const Var x = other.constant(Matrix(1, 1, 2.0));
  EXPECT_THROW(tape.backward(x), std::logic_error);
}

TEST(Backward, NonScalarLossThrows) {
  Tape tape;
  Param w("w", Matrix(2, 2, 1.0));
  EXPECT_THROW(tape.backward(tape.param(w)), ShapeError);
}

TEST(Backward, TapeIsClearedAfterBackward) {
  Tape tape;
  Param w("w", Matrix(1, 1, 3.0));
  const Var loss = ag::sum(tape.param(w));
  tape.backward(loss);
  EXPECT_TRUE(tape.empty());
}

// Composite forward of every differentiable op against central differences.
TEST(Backward, CompositeMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(100 + seed);
    Param w1("w1", rand_matrix(4, 6, rng, 0.5));
    Param b1("b1", rand_matrix(1, 6, rng, 0.5));
    Param g("g", rand_matrix(1, 6, rng, 0.5));
    Param bb("bb", rand_matrix(1, 6, rng, 0.5));
    Param w2("w2", rand_matrix(6, 3, rng, 0.5));
    const Matrix x = rand_matrix(5, 4, rng);
    Mask mask(5, 5);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j <= i; ++j) mask.set(i, j, true);
    const std::size_t pick[] = {4, 1, 1, 0};

    auto forward = [&](Tape& tape) {
      const Var xv = tape.constant(x);
      const Var bv = tape.param(b1);
      Var h = ag::linear(xv, tape.param(w1), &bv);
      h = ag::layer_norm(h, tape.param(g), tape.param(bb), kLayerNormEps);
      const Var att = ag::softmax_rows(ag::matmul_nt(h, h), &mask);
      h = ag::add(ag::matmul(att, h), ag::relu(h));
      const Var m = ag::mean_rows(h, 1, 4);
      h = ag::add_row(h, m);
      const Var parts[] = {ag::slice_rows(h, 0, 2), ag::gather_rows(h, pick)};
      h = ag::concat_rows(parts);
      const Var cols[] = {ag::slice_cols(h, 0, 3), ag::slice_cols(h, 3, 6)};
      h = ag::concat_cols(cols);
      const Var out = ag::log_softmax_rows(ag::matmul(ag::slice_cols(h, 0, 6), tape.param(w2)));
      return ag::scale(ag::sum(out), -0.5);
    };
    Param* params[] = {&w1, &b1, &g, &bb, &w2};
    {
      Tape tape;
      apply_gradients(params, tape.backward(forward(tape)));
    }
    const auto report = testing::finite_difference_check(params, [&] {
      Tape tape;
      return forward(tape).value()(0, 0);
    });
    EXPECT_LE(report.worst_rel, 1e-3) << "seed " << seed;
    EXPECT_EQ(report.checked, 4u * 6 + 6 + 6 + 6 + 18);
  }
}

TEST(Backward, DropoutZeroIsIdentityAndScalesKeptUnits) {
  std::mt19937_64 rng(13);
  Tape tape;
  const Var x = tape.constant(Matrix(20, 20, 1.0));
  EXPECT_EQ(ag::dropout(x, 0.0, rng).value(), x.value());
  const Matrix dropped = ag::dropout(x, 0.5, rng).value();
  for (double v : dropped.data()) EXPECT_TRUE(v == 0.0 || v == 2.0);
}

// ---- Adam ----

TEST(Adam, FirstStepClosedForm) {
  Param p("p", Matrix::from_rows({{1.0, -2.0, 0.5}}));
  p.grad = Matrix::from_rows({{0.3, -0.1, 2.0}});
  const Matrix before = p.value;
  const Matrix g = p.grad;
  Param* params[] = {&p};
  const AdamOptions opt{0.01, 0.9, 0.98, 1e-8};
  adam_step(params, opt);
  for (std::size_t j = 0; j < 3; ++j) {
    // m_hat = g, v_hat = g^2 after bias correction.
    const double expected = before(0, j) - opt.lr * g(0, j) / (std::abs(g(0, j)) + opt.eps);
    EXPECT_NEAR(p.value(0, j), expected, 1e-15);
  }
  EXPECT_EQ(p.grad, Matrix(1, 3));
  EXPECT_EQ(p.step_count, 1);
}

TEST(Adam, ZeroGradLeavesValue) {
  Param p("p", Matrix::from_rows({{1.0, 2.0}}));
  p.grad = Matrix(1, 2);
  Param* params[] = {&p};
  adam_step(params, AdamOptions{});
  EXPECT_EQ(p.value, Matrix::from_rows({{1.0, 2.0}}));
}

TEST(Adam, TwoStepsMatchRecurrence) {
  const double g = 0.7;
  const double lr = 0.05, b1 = 0.9, b2 = 0.98, eps = 1e-8;
  Param p("p", Matrix(1, 1, 1.0));
  Param* params[] = {&p};
  double value = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 2; ++t) {
    p.grad = Matrix(1, 1, g);
    adam_step(params, AdamOptions{lr, b1, b2, eps});
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    value -= lr * mh / (std::sqrt(vh) + eps);
    EXPECT_NEAR(p.value(0, 0), value, 1e-14);
  }
}

}  // namespace
}  // namespace emformer
