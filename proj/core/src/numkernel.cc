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

#include "emformer/numkernel.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "emformer/errors.h"

namespace emformer {
namespace {

void require(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                     b.shape_string());
  }
}

}  // namespace

Param::Param(std::string name_in, Matrix value_in)
    : name(std::move(name_in)),
      value(std::move(value_in)),
      grad(value.rows(), value.cols()),
      adam_m(value.rows(), value.cols()),
      adam_v(value.rows(), value.cols()) {}

Matrix random_normal(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul", a, b);
  Matrix out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* dst = out.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const double* src = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt", a, b);
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ai = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto bj = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < ai.size(); ++k) acc += ai[k] * bj[k];
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_tn", a, b);
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto ak = a.row(k);
    const double* src = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = ak[i];
      if (aki == 0.0) continue;
      double* dst = out.row(i).data();
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aki * src[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "add", a, b);
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

Matrix scale(const Matrix& m, double factor) {
  Matrix out = m;
  for (double& v : out.data()) v *= factor;
  return out;
}

Matrix add_row(const Matrix& m, const Matrix& row) {
  require(row.rows() == 1 && row.cols() == m.cols(), "add_row", m, row);
  Matrix out = m;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += row(0, j);
  }
  return out;
}

Matrix relu(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

Matrix softmax_rows(const Matrix& m, const Mask* mask) {
  if (mask != nullptr && (mask->rows() != m.rows() || mask->cols() != m.cols())) {
    throw ShapeError("softmax_rows: mask (" + std::to_string(mask->rows()) + "x" +
                     std::to_string(mask->cols()) + ") does not match scores " +
                     m.shape_string());
  }
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto in = m.row(i);
    auto dst = out.row(i);
    double max_v = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < in.size(); ++j) {
      if (mask != nullptr && !(*mask)(i, j)) continue;
      max_v = std::max(max_v, in[j]);
      any = true;
    }
    if (!any) {
      throw DegenerateMaskError("softmax_rows: row " + std::to_string(i) +
                                " has no visible entry");
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      if (mask != nullptr && !(*mask)(i, j)) continue;
      dst[j] = std::exp(in[j] - max_v);
      sum += dst[j];
    }
    for (double& v : dst) v /= sum;
  }
  return out;
}

Matrix log_softmax_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto in = m.row(i);
    const double max_v = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (double v : in) sum += std::exp(v - max_v);
    const double log_z = max_v + std::log(sum);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < in.size(); ++j) dst[j] = in[j] - log_z;
  }
  return out;
}

Matrix layer_norm(const Matrix& m, const Matrix& gain, const Matrix& bias, double eps) {
  require(gain.rows() == 1 && gain.cols() == m.cols(), "layer_norm gain", m, gain);
  require(bias.rows() == 1 && bias.cols() == m.cols(), "layer_norm bias", m, bias);
  Matrix out(m.rows(), m.cols());
  const double n = static_cast<double>(m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto in = m.row(i);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= n;
    const double inv_std = 1.0 / std::sqrt(var + eps);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < in.size(); ++j) {
      dst[j] = (in[j] - mean) * inv_std * gain(0, j) + bias(0, j);
    }
  }
  return out;
}

Matrix linear(const Matrix& x, const Param& w, const Param* b) {
  Matrix out = matmul(x, w.value);
  if (b != nullptr) out = add_row(out, b->value);
  return out;
}

std::vector<double> mean_pool_rows(const Matrix& m) {
  if (m.rows() == 0) throw ShapeError("mean_pool_rows: empty input");
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto in = m.row(i);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += in[j];
  }
  for (double& v : out) v /= static_cast<double>(m.rows());
  return out;
}

Matrix concat_rows(std::span<const Matrix* const> parts) {
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool have_cols = false;
  for (const Matrix* p : parts) {
    if (p->rows() == 0) continue;
    if (have_cols && p->cols() != cols) {
      throw ShapeError("concat_rows: column mismatch " + p->shape_string());
    }
    cols = p->cols();
    have_cols = true;
    rows += p->rows();
  }
  if (!have_cols && !parts.empty()) cols = parts.front()->cols();
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const Matrix* p : parts) {
    if (p->rows() == 0) continue;
    data.insert(data.end(), p->data().begin(), p->data().end());
  }
  return Matrix(rows, cols, std::move(data));
}

Matrix concat_cols(std::span<const Matrix* const> parts) {
  if (parts.empty()) return {};
  const std::size_t rows = parts.front()->rows();
  std::size_t cols = 0;
  for (const Matrix* p : parts) {
    if (p->rows() != rows) throw ShapeError("concat_cols: row mismatch " + p->shape_string());
    cols += p->cols();
  }
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    double* dst = out.row(i).data();
    for (const Matrix* p : parts) {
      const auto src = p->row(i);
      dst = std::copy(src.begin(), src.end(), dst);
    }
  }
  return out;
}

Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t end) {
  if (begin > end || end > m.rows()) {
    throw ShapeError("slice_rows: [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") out of " + m.shape_string());
  }
  const auto first = m.data().begin() + static_cast<std::ptrdiff_t>(begin * m.cols());
  const auto last = m.data().begin() + static_cast<std::ptrdiff_t>(end * m.cols());
  return Matrix(end - begin, m.cols(), std::vector<double>(first, last));
}

Matrix slice_cols(const Matrix& m, std::size_t begin, std::size_t end) {
  if (begin > end || end > m.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") out of " + m.shape_string());
  }
  Matrix out(m.rows(), end - begin);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto src = m.row(i);
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(begin),
              src.begin() + static_cast<std::ptrdiff_t>(end), out.row(i).begin());
  }
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= m.rows()) {
      throw ShapeError("gather_rows: row " + std::to_string(rows[i]) + " out of " +
                       m.shape_string());
    }
    const auto src = m.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace emformer
