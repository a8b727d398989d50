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
#include <functional>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "emformer/matrix.h"
#include "emformer/numkernel.h"

namespace emformer {

class Tape;

// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

using Gradients = std::unordered_map<const Param*, Matrix>;

// Records a forward computation for one reverse-mode pass. The recording is
// consumed by backward(); streaming inference never touches a Tape.
class Tape {
 public:
  // Receives the gradient of the node's output and the output value itself.
  using BackwardFn =
      std::function<void(Tape& tape, const Matrix& out_grad, const Matrix& out_value)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // Leaf for a parameter. Repeated calls with the same Param return the same
  // leaf.
  Var param(const Param& p);

  // Appends a node. `inputs` are the ids the node reads from; the node
  // requires a gradient iff any input does.
  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Matrix value, std::span<const Var> inputs, BackwardFn backward);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Adds delta into the gradient slot of node id (no-op for constants).
  void accumulate(std::size_t id, const Matrix& delta);
  void accumulate_row(std::size_t id, std::size_t row, std::span<const double> delta);

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  // Reverse pass from a 1x1 loss. Returns d(loss)/d(param) for every param
  // leaf on the tape, then clears the recording.
  Gradients backward(Var loss);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool has_grad = false;
    bool requires_grad = false;
    const Param* param = nullptr;
    BackwardFn backward;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  std::unordered_map<const Param*, std::size_t> param_ids_;
};

// Writes grads into each param (zero for params absent from `grads`).
void apply_gradients(std::span<Param* const> params, const Gradients& grads);

// Differentiable counterparts of the numkernel operations.
namespace ag {

Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
Var add_row(Var m, Var row);
Var scale(Var m, double factor);
Var relu(Var m);
Var softmax_rows(Var m, const Mask* mask);
Var log_softmax_rows(Var m);
Var layer_norm(Var m, Var gain, Var bias, double eps);
Var linear(Var x, Var w, const Var* b = nullptr);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(Var m, std::size_t begin, std::size_t end);
Var slice_cols(Var m, std::size_t begin, std::size_t end);
Var gather_rows(Var m, std::span<const std::size_t> rows);
// 1 x cols mean over rows [begin, end).
Var mean_rows(Var m, std::size_t begin, std::size_t end);
// 1x1 sum of all entries.
Var sum(Var m);
// Inverted dropout. p == 0 returns m unchanged.
Var dropout(Var m, double p, std::mt19937_64& rng);

}  // namespace ag
}  // namespace emformer
