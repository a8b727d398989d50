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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "emformer/autograd.h"
#include "emformer/config.h"
#include "emformer/matrix.h"
#include "emformer/numkernel.h"

namespace emformer::testing {

inline Matrix rand_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                          double stddev = 1.0) {
  return random_normal(rows, cols, stddev, rng);
}

// Row-normalized log posteriors with random logits.
inline Matrix rand_log_probs(std::size_t t, std::size_t k, std::mt19937_64& rng,
                             double stddev = 1.0) {
  return log_softmax_rows(random_normal(t, k, stddev, rng));
}

// Triple loop.
inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double acc = 0.0L;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += static_cast<long double>(a(i, k)) * b(k, j);
      out(i, j) = static_cast<double>(acc);
    }
  return out;
}

inline Matrix naive_transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

// exp / sum per row in long double, mask optional.
inline Matrix naive_softmax(const Matrix& m, const Mask* mask = nullptr) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    long double total = 0.0L;
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (mask == nullptr || (*mask)(i, j)) total += std::exp(static_cast<long double>(m(i, j)));
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (mask == nullptr || (*mask)(i, j))
        out(i, j) = static_cast<double>(std::exp(static_cast<long double>(m(i, j))) / total);
  }
  return out;
}

inline Matrix naive_attend(const Matrix& q, const Matrix& k, const Matrix& v,
                           const Mask* mask = nullptr) {
  Matrix scores = naive_matmul(q, naive_transpose(k));
  const double s = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  for (double& x : scores.data()) x *= s;
  return naive_matmul(naive_softmax(scores, mask), v);
}

struct GradCheckReport {
  double worst_rel = 0.0;
  std::size_t checked = 0;
};

// Relative error with a floor on the denominator so entries whose true
// gradient is zero are judged on absolute error.
inline double rel_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Central differences on every entry (or every `stride`-th) of every param,
// compared against the gradients already stored in param->grad.
inline GradCheckReport finite_difference_check(std::span<Param* const> params,
                                               const std::function<double()>& loss,
                                               double h = 1e-4, std::size_t stride = 1) {
  GradCheckReport report;
  std::size_t counter = 0;
  for (Param* p : params) {
    auto values = p->value.data();
    for (std::size_t i = 0; i < values.size(); ++i, ++counter) {
      if (counter % stride != 0) continue;
      const double saved = values[i];
      values[i] = saved + h;
      const double up = loss();
      values[i] = saved - h;
      const double down = loss();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      report.worst_rel = std::max(report.worst_rel, rel_error(p->grad.data()[i], numeric));
      ++report.checked;
    }
  }
  return report;
}

inline EmformerConfig small_config(std::size_t c, std::size_t r, std::size_t l, std::size_t m,
                                   std::size_t layers = 2) {
  EmformerConfig cfg;
  cfg.num_layers = layers;
  cfg.model_dim = 8;
  cfg.ffn_dim = 12;
  cfg.heads = 2;
  cfg.center_frames = c;
  cfg.future_frames = r;
  cfg.left_frames = l;
  cfg.memory_capacity = m;
  cfg.frame_ms = 40;
  cfg.input_dim = 5;
  cfg.vocab_size = 4;
  return cfg;
}

}  // namespace emformer::testing
