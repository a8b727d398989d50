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
#include <deque>
#include <random>
#include <string>
#include <vector>

#include "emformer/attention.h"
#include "emformer/config.h"
#include "emformer/matrix.h"
#include "emformer/numkernel.h"

namespace emformer {

struct EmformerLayer {
  MhaWeights attn;
  FfnWeights ffn;
  // LayerNorm before attention, before the FFN, and after the FFN residual.
  Param ln_attn_gain;
  Param ln_attn_bias;
  Param ln_ffn_gain;
  Param ln_ffn_bias;
  Param ln_out_gain;
  Param ln_out_bias;

  static EmformerLayer random(const std::string& prefix, const EmformerConfig& cfg,
                              std::mt19937_64& rng);
  void collect(std::vector<Param*>& out);
  void collect(std::vector<const Param*>& out) const;
};

// Left-context key/value projections of the most recent center frames of one
// layer, per head, plus the layer-input rows they were projected from.
struct KvCache {
  std::vector<Matrix> keys;
  std::vector<Matrix> values;
  Matrix source;

  std::size_t size() const { return source.rows(); }
};

// Bounded FIFO of memory vectors for one layer, oldest first.
class MemoryBank {
 public:
  explicit MemoryBank(std::size_t capacity = 0) : capacity_(capacity) {}

  // Appends the memory vector produced for block `origin_block`, evicting the
  // oldest entry when full. A zero-capacity bank stays empty.
  void push(std::vector<double> vector, std::size_t origin_block);

  std::size_t size() const { return vectors_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return vectors_.empty(); }
  const std::vector<double>& vector(std::size_t i) const { return vectors_[i]; }
  std::size_t origin_block(std::size_t i) const { return origins_[i]; }
  // size() x model_dim, oldest row first.
  Matrix as_matrix(std::size_t model_dim) const;
  // Overwrites stored vectors in place, keeping their origins.
  void set_vector(std::size_t i, std::vector<double> vector) { vectors_[i] = std::move(vector); }

 private:
  std::size_t capacity_;
  std::deque<std::vector<double>> vectors_;
  std::deque<std::size_t> origins_;
};

struct BlockResult {
  Matrix center_out;
  Matrix right_out;
  // Memory vector of this block, fed to the next layer's bank.
  std::vector<double> memory;
  // Per head, the summary query's attention weights over the key layout
  // [memory | left context | center | right].
  std::vector<std::vector<double>> summary_weights;
};

// Runs one layer over one block. `cache` is read as the left context and then
// replaced by the trailing left_frames center rows; `bank` holds the memory
// vectors visible to this layer.
BlockResult layer_forward_block(const EmformerLayer& layer, const EmformerConfig& cfg,
                                const Matrix& center, const Matrix& right, KvCache& cache,
                                const MemoryBank& bank);

}  // namespace emformer
