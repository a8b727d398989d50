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
#include <optional>
#include <random>

#include "emformer/autograd.h"
#include "emformer/layout.h"
#include "emformer/matrix.h"
#include "emformer/model.h"

namespace emformer {

struct ParallelOptions {
  // Applied to attention and FFN outputs; 0 disables dropout entirely.
  double dropout = 0.0;
  std::mt19937_64* rng = nullptr;
};

// Whole-utterance masked pass over the hard-copy layout. `features` is
// T x input_dim; the result is the final layer's center rows, T x model_dim,
// in original frame order.
Var encoder_forward_parallel(Tape& tape, const EmformerModel& model, Var features,
                             const BlockLayout& layout, const ParallelOptions& options = {});

// Per-frame log-posteriors (T x vocab_size) on top of the parallel encoder.
Var log_probs_parallel(Tape& tape, const EmformerModel& model, Var features,
                       const BlockLayout& layout, const ParallelOptions& options = {});

// Inference conveniences without dropout.
Matrix encoder_forward_parallel(const EmformerModel& model, const Matrix& features,
                                std::optional<std::size_t> future_override = std::nullopt);
Matrix logits_parallel(const EmformerModel& model, const Matrix& features,
                       std::optional<std::size_t> future_override = std::nullopt);

// Output head applied row-wise to encoder output.
Matrix output_logits(const EmformerModel& model, const Matrix& encoded);

}  // namespace emformer
