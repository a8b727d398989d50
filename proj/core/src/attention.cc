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

#include "emformer/attention.h"

#include <cmath>

#include "emformer/errors.h"

namespace emformer {
namespace {

void check_attend_shapes(const Matrix& q, const Matrix& k, const Matrix& v,
                         const AttnMask* mask) {
  if (q.cols() != k.cols()) {
    throw ShapeError("attend: query " + q.shape_string() + " vs key " + k.shape_string());
  }
  if (k.rows() != v.rows()) {
    throw ShapeError("attend: key " + k.shape_string() + " vs value " + v.shape_string());
  }
  if (mask != nullptr && (mask->rows() != q.rows() || mask->cols() != k.rows())) {
    throw ShapeError("attend: mask (" + std::to_string(mask->rows()) + "x" +
                     std::to_string(mask->cols()) + ") for " + std::to_string(q.rows()) +
                     " queries and " + std::to_string(k.rows()) + " keys");
  }
}

double inv_sqrt(std::size_t d) { return 1.0 / std::sqrt(static_cast<double>(d)); }

}  // namespace

MhaWeights MhaWeights::random(const std::string& prefix, std::size_t model_dim,
                              std::size_t heads, std::mt19937_64& rng) {
  if (heads == 0 || model_dim % heads != 0) {
    throw ShapeError("MhaWeights: heads must divide model_dim");
  }
  const std::size_t head_dim = model_dim / heads;
  const double stddev = inv_sqrt(model_dim);
  MhaWeights w;
  for (std::size_t h = 0; h < heads; ++h) {
    const std::string idx = std::to_string(h);
    w.wq.emplace_back(prefix + ".wq." + idx, random_normal(model_dim, head_dim, stddev, rng));
    w.wk.emplace_back(prefix + ".wk." + idx, random_normal(model_dim, head_dim, stddev, rng));
    w.wv.emplace_back(prefix + ".wv." + idx, random_normal(model_dim, head_dim, stddev, rng));
  }
  w.wo = Param(prefix + ".wo", random_normal(model_dim, model_dim, stddev, rng));
  return w;
}

void MhaWeights::collect(std::vector<Param*>& out) {
  for (std::size_t h = 0; h < heads(); ++h) {
    out.push_back(&wq[h]);
    out.push_back(&wk[h]);
    out.push_back(&wv[h]);
  }
  out.push_back(&wo);
}

void MhaWeights::collect(std::vector<const Param*>& out) const {
  for (std::size_t h = 0; h < heads(); ++h) {
    out.push_back(&wq[h]);
    out.push_back(&wk[h]);
    out.push_back(&wv[h]);
  }
  out.push_back(&wo);
}

FfnWeights FfnWeights::random(const std::string& prefix, std::size_t model_dim,
                              std::size_t ffn_dim, std::mt19937_64& rng) {
  FfnWeights w;
  w.w1 = Param(prefix + ".w1", random_normal(model_dim, ffn_dim, inv_sqrt(model_dim), rng));
  w.b1 = Param(prefix + ".b1", Matrix(1, ffn_dim));
  w.w2 = Param(prefix + ".w2", random_normal(ffn_dim, model_dim, inv_sqrt(ffn_dim), rng));
  w.b2 = Param(prefix + ".b2", Matrix(1, model_dim));
  return w;
}

void FfnWeights::collect(std::vector<Param*>& out) {
  out.insert(out.end(), {&w1, &b1, &w2, &b2});
}

void FfnWeights::collect(std::vector<const Param*>& out) const {
  out.insert(out.end(), {&w1, &b1, &w2, &b2});
}

void validate_mha(const MhaWeights& w) {
  if (w.heads() == 0) throw ShapeError("mha: no heads");
  if (w.wk.size() != w.heads() || w.wv.size() != w.heads()) {
    throw ShapeError("mha: per-head projection counts differ");
  }
  const std::size_t d = w.wo.value.rows();
  if (w.head_dim() * w.heads() != d || w.wo.value.cols() != d) {
    throw ShapeError("mha: head_dim x heads must equal model_dim");
  }
}

Matrix attend(const Matrix& q, const Matrix& k, const Matrix& v, const AttnMask* mask) {
  check_attend_shapes(q, k, v, mask);
  const Matrix scores = scale(matmul_nt(q, k), inv_sqrt(k.cols()));
  return matmul(softmax_rows(scores, mask), v);
}

Matrix mha(const Matrix& x_query, const Matrix& x_key, const Matrix& x_value, const MhaWeights& w,
           const AttnMask* mask) {
  validate_mha(w);
  const std::size_t d = w.model_dim();
  if (x_query.cols() != d || x_key.cols() != d || x_value.cols() != d) {
    throw ShapeError("mha: inputs must have model_dim " + std::to_string(d) + " columns");
  }
  std::vector<Matrix> heads;
  heads.reserve(w.heads());
  for (std::size_t h = 0; h < w.heads(); ++h) {
    heads.push_back(attend(linear(x_query, w.wq[h]), linear(x_key, w.wk[h]),
                           linear(x_value, w.wv[h]), mask));
  }
  std::vector<const Matrix*> parts;
  for (const Matrix& m : heads) parts.push_back(&m);
  return linear(concat_cols(parts), w.wo);
}

Matrix ffn(const Matrix& x, const Param& w1, const Param& b1, const Param& w2, const Param& b2) {
  return linear(relu(linear(x, w1, &b1)), w2, &b2);
}

namespace ag {

Var attend(Var q, Var k, Var v, const AttnMask* mask) {
  check_attend_shapes(q.value(), k.value(), v.value(), mask);
  Var scores = scale(matmul_nt(q, k), inv_sqrt(k.cols()));
  return matmul(softmax_rows(scores, mask), v);
}

Var mha(Tape& tape, Var x_query, Var x_key, Var x_value, const MhaWeights& w,
        const AttnMask* mask) {
  validate_mha(w);
  std::vector<Var> heads;
  heads.reserve(w.heads());
  for (std::size_t h = 0; h < w.heads(); ++h) {
    heads.push_back(attend(matmul(x_query, tape.param(w.wq[h])),
                           matmul(x_key, tape.param(w.wk[h])),
                           matmul(x_value, tape.param(w.wv[h])), mask));
  }
  Var joined = heads.size() == 1 ? heads.front() : concat_cols(heads);
  return matmul(joined, tape.param(w.wo));
}

Var ffn(Tape& tape, Var x, const FfnWeights& w) {
  Var b1 = tape.param(w.b1);
  Var b2 = tape.param(w.b2);
  Var hidden = relu(linear(x, tape.param(w.w1), &b1));
  return linear(hidden, tape.param(w.w2), &b2);
}

}  // namespace ag
}  // namespace emformer
