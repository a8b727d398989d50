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

#include "emformer/layer.h"

#include <cmath>

#include "emformer/errors.h"

namespace emformer {
namespace {

Matrix trailing_rows(const Matrix& m, std::size_t keep) {
  if (m.rows() <= keep) return m;
  return slice_rows(m, m.rows() - keep, m.rows());
}

Matrix stack(std::initializer_list<const Matrix*> parts) {
  return concat_rows(std::span<const Matrix* const>(parts.begin(), parts.size()));
}

}  // namespace

EmformerLayer EmformerLayer::random(const std::string& prefix, const EmformerConfig& cfg,
                                    std::mt19937_64& rng) {
  EmformerLayer layer;
  layer.attn = MhaWeights::random(prefix + ".attn", cfg.model_dim, cfg.heads, rng);
  layer.ffn = FfnWeights::random(prefix + ".ffn", cfg.model_dim, cfg.ffn_dim, rng);
  const Matrix ones(1, cfg.model_dim, 1.0);
  const Matrix zeros(1, cfg.model_dim, 0.0);
  layer.ln_attn_gain = Param(prefix + ".ln_attn.gain", ones);
  layer.ln_attn_bias = Param(prefix + ".ln_attn.bias", zeros);
  layer.ln_ffn_gain = Param(prefix + ".ln_ffn.gain", ones);
  layer.ln_ffn_bias = Param(prefix + ".ln_ffn.bias", zeros);
  layer.ln_out_gain = Param(prefix + ".ln_out.gain", ones);
  layer.ln_out_bias = Param(prefix + ".ln_out.bias", zeros);
  return layer;
}

void EmformerLayer::collect(std::vector<Param*>& out) {
  attn.collect(out);
  ffn.collect(out);
  out.insert(out.end(), {&ln_attn_gain, &ln_attn_bias, &ln_ffn_gain, &ln_ffn_bias, &ln_out_gain,
                         &ln_out_bias});
}

void EmformerLayer::collect(std::vector<const Param*>& out) const {
  attn.collect(out);
  ffn.collect(out);
  out.insert(out.end(), {&ln_attn_gain, &ln_attn_bias, &ln_ffn_gain, &ln_ffn_bias, &ln_out_gain,
                         &ln_out_bias});
}

void MemoryBank::push(std::vector<double> vector, std::size_t origin_block) {
  if (capacity_ == 0) return;
  if (!origins_.empty() && origin_block <= origins_.back()) {
    throw std::logic_error("MemoryBank: memory vectors must arrive in block order");
  }
  vectors_.push_back(std::move(vector));
  origins_.push_back(origin_block);
  while (vectors_.size() > capacity_) {
    vectors_.pop_front();
    origins_.pop_front();
  }
}

Matrix MemoryBank::as_matrix(std::size_t model_dim) const {
  Matrix m(vectors_.size(), model_dim);
  for (std::size_t i = 0; i < vectors_.size(); ++i) {
    if (vectors_[i].size() != model_dim) throw ShapeError("MemoryBank: vector width mismatch");
    std::copy(vectors_[i].begin(), vectors_[i].end(), m.row(i).begin());
  }
  return m;
}

BlockResult layer_forward_block(const EmformerLayer& layer, const EmformerConfig& cfg,
                                const Matrix& center, const Matrix& right_in, KvCache& cache,
                                const MemoryBank& bank) {
  const std::size_t d = cfg.model_dim;
  const std::size_t heads = layer.attn.heads();
  if (center.rows() == 0) throw ShapeError("layer_forward_block: empty center block");
  if (center.rows() > cfg.center_frames) {
    throw ShapeError("layer_forward_block: center block has " + std::to_string(center.rows()) +
                     " rows, limit " + std::to_string(cfg.center_frames));
  }
  if (center.cols() != d || (right_in.rows() > 0 && right_in.cols() != d)) {
    throw ShapeError("layer_forward_block: inputs must have model_dim columns");
  }
  const Matrix right = right_in.rows() > 0 ? right_in : Matrix(0, d);
  validate_mha(layer.attn);
  if (cache.keys.empty()) {
    cache.keys.assign(heads, Matrix(0, layer.attn.head_dim()));
    cache.values.assign(heads, Matrix(0, layer.attn.head_dim()));
    cache.source = Matrix(0, d);
  }

  const std::size_t c = center.rows();
  const std::size_t r = right.rows();
  const Matrix x = stack({&center, &right});
  const Matrix x_norm = layer_norm(x, layer.ln_attn_gain.value, layer.ln_attn_bias.value,
                                   kLayerNormEps);
  const Matrix summary = Matrix::row_vector(mean_pool_rows(center));
  const Matrix memory = bank.as_matrix(d);
  const Matrix queries = stack({&x_norm, &summary});

  const std::size_t m = memory.rows();
  const std::size_t l = cache.size();
  const std::size_t keys = m + l + c + r;
  AttnMask mask(c + r + 1, keys, true);
  for (std::size_t j = 0; j < m; ++j) mask.set(c + r, j, false);

  BlockResult result;
  std::vector<Matrix> head_out;
  std::vector<Matrix> center_keys;
  std::vector<Matrix> center_values;
  for (std::size_t h = 0; h < heads; ++h) {
    const Param& wk = layer.attn.wk[h];
    const Param& wv = layer.attn.wv[h];
    const Matrix mem_k = linear(memory, wk);
    const Matrix mem_v = linear(memory, wv);
    Matrix c_k = linear(center, wk);
    Matrix c_v = linear(center, wv);
    const Matrix r_k = linear(right, wk);
    const Matrix r_v = linear(right, wv);
    const Matrix k = stack({&mem_k, &cache.keys[h], &c_k, &r_k});
    const Matrix v = stack({&mem_v, &cache.values[h], &c_v, &r_v});
    const Matrix q = linear(queries, layer.attn.wq[h]);
    const Matrix weights =
        softmax_rows(scale(matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(k.cols()))),
                     &mask);
    const auto summary_row = weights.row(c + r);
    result.summary_weights.emplace_back(summary_row.begin(), summary_row.end());
    head_out.push_back(matmul(weights, v));
    center_keys.push_back(std::move(c_k));
    center_values.push_back(std::move(c_v));
  }
  std::vector<const Matrix*> parts;
  for (const Matrix& hm : head_out) parts.push_back(&hm);
  const Matrix attended = linear(concat_cols(parts), layer.attn.wo);

  const Matrix z = add(slice_rows(attended, 0, c + r), x);
  const auto mem_row = attended.row(c + r);
  result.memory.assign(mem_row.begin(), mem_row.end());

  const Matrix z_norm = layer_norm(z, layer.ln_ffn_gain.value, layer.ln_ffn_bias.value,
                                   kLayerNormEps);
  const Matrix out = layer_norm(add(ffn(z_norm, layer.ffn), z), layer.ln_out_gain.value,
                                layer.ln_out_bias.value, kLayerNormEps);
  result.center_out = slice_rows(out, 0, c);
  result.right_out = slice_rows(out, c, c + r);

  for (std::size_t h = 0; h < heads; ++h) {
    cache.keys[h] = trailing_rows(stack({&cache.keys[h], &center_keys[h]}), cfg.left_frames);
    cache.values[h] = trailing_rows(stack({&cache.values[h], &center_values[h]}), cfg.left_frames);
  }
  cache.source = trailing_rows(stack({&cache.source, &center}), cfg.left_frames);
  return result;
}

}  // namespace emformer
