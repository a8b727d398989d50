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

#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "emformer/autograd.h"
#include "emformer/matrix.h"
#include "emformer/numkernel.h"

namespace emformer {

// Rows are queries, columns are keys; true = visible.
using AttnMask = Mask;

// Per-head query/key/value projections (model_dim x head_dim each) and the
// shared output projection (model_dim x model_dim).
struct MhaWeights {
  std::vector<Param> wq;
  std::vector<Param> wk;
  std::vector<Param> wv;
  Param wo;

  std::size_t heads() const { return wq.size(); }
  std::size_t model_dim() const { return wo.value.cols(); }
  std::size_t head_dim() const { return wq.empty() ? 0 : wq.front().value.cols(); }

  static MhaWeights random(const std::string& prefix, std::size_t model_dim, std::size_t heads,
                           std::mt19937_64& rng);
  void collect(std::vector<Param*>& out);
  void collect(std::vector<const Param*>& out) const;
};

// Position-wise feed-forward weights: relu(x W1 + b1) W2 + b2.
struct FfnWeights {
  Param w1;
  Param b1;
  Param w2;
  Param b2;

  static FfnWeights random(const std::string& prefix, std::size_t model_dim, std::size_t ffn_dim,
                           std::mt19937_64& rng);
  void collect(std::vector<Param*>& out);
  void collect(std::vector<const Param*>& out) const;
};

// softmax(q k^T / sqrt(d_k), mask) v
Matrix attend(const Matrix& q, const Matrix& k, const Matrix& v, const AttnMask* mask = nullptr);

Matrix mha(const Matrix& x_query, const Matrix& x_key, const Matrix& x_value, const MhaWeights& w,
           const AttnMask* mask = nullptr);

Matrix ffn(const Matrix& x, const Param& w1, const Param& b1, const Param& w2, const Param& b2);
inline Matrix ffn(const Matrix& x, const FfnWeights& w) { return ffn(x, w.w1, w.b1, w.w2, w.b2); }

void validate_mha(const MhaWeights& w);

namespace ag {

Var attend(Var q, Var k, Var v, const AttnMask* mask);
Var mha(Tape& tape, Var x_query, Var x_key, Var x_value, const MhaWeights& w,
        const AttnMask* mask);
Var ffn(Tape& tape, Var x, const FfnWeights& w);

}  // namespace ag
}  // namespace emformer
