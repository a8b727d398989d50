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

#include <random>

#include "emformer/attention.h"
#include "emformer/autograd.h"
#include "emformer/errors.h"
#include "test_util.h"

namespace emformer {
namespace {

using testing::naive_attend;
using testing::naive_matmul;
using testing::rand_matrix;

TEST(Attend, SingleKeyReturnsItsValue) {
  std::mt19937_64 rng(1);
  const Matrix q = rand_matrix(3, 4, rng);
  const Matrix k = rand_matrix(1, 4, rng);
  const Matrix v = rand_matrix(1, 5, rng);
  const Matrix out = attend(q, k, v);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(out(i, j), v(0, j));
}

TEST(Attend, EqualScoresAverageValues) {
  std::mt19937_64 rng(2);
  const Matrix q = Matrix::from_rows({{0, 0, 1}});
  const Matrix k = Matrix::from_rows({{1, 0, 0}, {0, 1, 0}, {-1, 2, 0}});
  const Matrix v = rand_matrix(3, 2, rng);
  const Matrix out = attend(q, k, v);
  for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(out(0, j), (v(0, j) + v(1, j) + v(2, j)) / 3, 1e-15);
}

TEST(Attend, MatchesDirectFormula) {
  std::mt19937_64 rng(3);
  const Matrix q = rand_matrix(4, 8, rng);
  const Matrix k = rand_matrix(4, 8, rng);
  const Matrix v = rand_matrix(4, 8, rng);
  EXPECT_LE(max_abs_diff(attend(q, k, v), naive_attend(q, k, v)), 1e-12);
}

TEST(Attend, ShapeAndMaskErrors) {
  EXPECT_THROW(attend(Matrix(2, 3), Matrix(2, 4), Matrix(2, 4)), ShapeError);
  EXPECT_THROW(attend(Matrix(2, 3), Matrix(2, 3), Matrix(3, 4)), ShapeError);
  Mask empty_row(2, 2);
  empty_row.set(0, 1, true);
  EXPECT_THROW(attend(Matrix(2, 3), Matrix(2, 3), Matrix(2, 3), &empty_row), DegenerateMaskError);
}

TEST(Attend, PermutingKeysWithMaskIsInvariant) {
  std::mt19937_64 rng(4);
  const Matrix q = rand_matrix(3, 4, rng);
  const Matrix k = rand_matrix(5, 4, rng);
  const Matrix v = rand_matrix(5, 2, rng);
  Mask mask(3, 5, true);
  mask.set(0, 1, false);
  mask.set(2, 4, false);
  const std::size_t perm[] = {3, 0, 4, 2, 1};
  Mask pmask(3, 5);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 5; ++j) pmask.set(i, j, mask(i, perm[j]));
  EXPECT_LE(max_abs_diff(attend(q, k, v, &mask),
                         attend(q, gather_rows(k, perm), gather_rows(v, perm), &pmask)),
            1e-14);
}

TEST(Attend, MaskedKeysNeverMatter) {
  std::mt19937_64 rng(5);
  const Matrix q = rand_matrix(3, 4, rng);
  Matrix k = rand_matrix(6, 4, rng);
  Matrix v = rand_matrix(6, 3, rng);
  Mask mask(3, 6, true);
  for (std::size_t i = 0; i < 3; ++i) mask.set(i, 2, false);
  const Matrix before = attend(q, k, v, &mask);
  for (double& x : k.row(2)) x = 1e3;
  for (double& x : v.row(2)) x = -7.0;
  EXPECT_EQ(attend(q, k, v, &mask), before);
}

TEST(Mha, SingleHeadIsAttendOfProjections) {
  std::mt19937_64 rng(6);
  const MhaWeights w = MhaWeights::random("a", 6, 1, rng);
  const Matrix x = rand_matrix(4, 6, rng);
  const Matrix y = rand_matrix(5, 6, rng);
  const Matrix expected = naive_matmul(
      naive_attend(naive_matmul(x, w.wq[0].value), naive_matmul(y, w.wk[0].value),
                   naive_matmul(y, w.wv[0].value)),
      w.wo.value);
  EXPECT_LE(max_abs_diff(mha(x, y, y, w), expected), 1e-12);
}

TEST(Mha, TwoHeadsManualAssembly) {
  std::mt19937_64 rng(7);
  const MhaWeights w = MhaWeights::random("a", 8, 2, rng);
  const Matrix x = rand_matrix(3, 8, rng);
  const Matrix kv = rand_matrix(5, 8, rng);
  Mask mask(3, 5, true);
  mask.set(1, 0, false);
  Matrix concat(3, 8);
  for (std::size_t h = 0; h < 2; ++h) {
    const Matrix head = naive_attend(naive_matmul(x, w.wq[h].value),
                                     naive_matmul(kv, w.wk[h].value),
                                     naive_matmul(kv, w.wv[h].value), &mask);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 4; ++j) concat(i, h * 4 + j) = head(i, j);
  }
  EXPECT_LE(max_abs_diff(mha(x, kv, kv, w, &mask), naive_matmul(concat, w.wo.value)), 1e-12);
}

TEST(Mha, DiagonalMaskIsolatesRows) {
  std::mt19937_64 rng(8);
  MhaWeights w = MhaWeights::random("a", 4, 1, rng);
  w.wq[0].value = Matrix::identity(4);
  w.wk[0].value = Matrix::identity(4);
  w.wv[0].value = Matrix::identity(4);
  w.wo.value = Matrix::identity(4);
  Mask diag(3, 3);
  for (std::size_t i = 0; i < 3; ++i) diag.set(i, i, true);
  Matrix x = rand_matrix(3, 4, rng);
  const Matrix before = mha(x, x, x, w, &diag);
  EXPECT_EQ(before, x);
  for (double& v : x.row(1)) v += 5.0;
  const Matrix after = mha(x, x, x, w, &diag);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_EQ(after(0, j), before(0, j));
    EXPECT_EQ(after(2, j), before(2, j));
  }
}

TEST(Mha, HeadsMustDivideModelDim) {
  std::mt19937_64 rng(9);
  EXPECT_THROW(MhaWeights::random("a", 6, 4, rng), std::invalid_argument);
}

TEST(Ffn, ZeroInputZeroBias) {
  std::mt19937_64 rng(10);
  FfnWeights w = FfnWeights::random("f", 4, 6, rng);
  w.b1.value.fill(0.0);
  w.b2.value.fill(0.0);
  EXPECT_EQ(ffn(Matrix(2, 4), w), Matrix(2, 4));
}

TEST(Ffn, OneDimensionalHandValue) {
  const Param w1("w1", Matrix(1, 1, 1.0));
  const Param b1("b1", Matrix(1, 1, -3.0));
  const Param w2("w2", Matrix(1, 1, 5.0));
  const Param b2("b2", Matrix(1, 1, 1.0));
  EXPECT_EQ(ffn(Matrix(1, 1, 2.0), w1, b1, w2, b2), Matrix(1, 1, 1.0));
}

TEST(Ffn, MatchesComposition) {
  std::mt19937_64 rng(11);
  const FfnWeights w = FfnWeights::random("f", 5, 7, rng);
  const Matrix x = rand_matrix(3, 5, rng);
  Matrix hidden = naive_matmul(x, w.w1.value);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 7; ++j) hidden(i, j) = std::max(0.0, hidden(i, j) + w.b1.value(0, j));
  Matrix expected = naive_matmul(hidden, w.w2.value);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 5; ++j) expected(i, j) += w.b2.value(0, j);
  EXPECT_LE(max_abs_diff(ffn(x, w), expected), 1e-12);
}

TEST(Mha, TapeVersionMatchesAndChecksGradients) {
  std::mt19937_64 rng(12);
  MhaWeights w = MhaWeights::random("a", 6, 2, rng);
  FfnWeights f = FfnWeights::random("f", 6, 9, rng);
  const Matrix x = rand_matrix(4, 6, rng);
  Mask mask(4, 4, true);
  mask.set(0, 3, false);
  std::vector<Param*> params;
  w.collect(params);
  f.collect(params);
  auto forward = [&](Tape& tape) {
    const Var xv = tape.constant(x);
    const Var a = ag::mha(tape, xv, xv, xv, w, &mask);
    return ag::ffn(tape, a, f);
  };
  {
    Tape tape;
    EXPECT_LE(max_abs_diff(forward(tape).value(), ffn(mha(x, x, x, w, &mask), f)), 1e-12);
  }
  {
    Tape tape;
    apply_gradients(params, tape.backward(ag::sum(forward(tape))));
  }
  const auto report = testing::finite_difference_check(params, [&] {
    Tape tape;
    return ag::sum(forward(tape)).value()(0, 0);
  });
  EXPECT_LE(report.worst_rel, 1e-3);
}

}  // namespace
}  // namespace emformer
