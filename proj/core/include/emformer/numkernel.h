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

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "emformer/matrix.h"

namespace emformer {

// A learnable matrix together with its gradient and Adam moments.
struct Param {
  Param() = default;
  Param(std::string name, Matrix value);

  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;
  std::int64_t step_count = 0;
};

// Fills a rows x cols matrix with N(0, stddev^2) draws.
Matrix random_normal(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng);

Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// a^T * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

Matrix add(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double factor);
// Adds a 1 x cols row to every row of m.
Matrix add_row(const Matrix& m, const Matrix& row);
Matrix relu(const Matrix& m);

// Row-wise softmax with max subtraction. Masked entries are exactly zero and
// excluded from the normalizer. Throws DegenerateMaskError for a row with no
// visible entry.
Matrix softmax_rows(const Matrix& m, const Mask* mask = nullptr);
Matrix log_softmax_rows(const Matrix& m);

// Per row: (x - mean) / sqrt(var + eps) * gain + bias, with the biased
// variance estimate. gain and bias are 1 x cols.
Matrix layer_norm(const Matrix& m, const Matrix& gain, const Matrix& bias, double eps);
inline constexpr double kLayerNormEps = 1e-5;

// x * w (+ b broadcast over rows).
Matrix linear(const Matrix& x, const Param& w, const Param* b = nullptr);

// Column-wise mean over all rows.
std::vector<double> mean_pool_rows(const Matrix& m);

Matrix concat_rows(std::span<const Matrix* const> parts);
Matrix concat_cols(std::span<const Matrix* const> parts);
Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t end);
Matrix slice_cols(const Matrix& m, std::size_t begin, std::size_t end);
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows);

// Standard Adam with bias correction; every parameter's gradient is cleared
// afterwards.
struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
};
void adam_step(std::span<Param* const> params, const AdamOptions& options);

}  // namespace emformer
