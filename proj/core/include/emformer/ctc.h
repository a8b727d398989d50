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
#include <cstdint>
#include <span>
#include <vector>

#include "emformer/autograd.h"
#include "emformer/matrix.h"

namespace emformer {

inline constexpr std::int32_t kBlank = 0;

// Label ids, blank excluded.
using LabelSeq = std::vector<std::int32_t>;

struct CtcResult {
  double nll = 0.0;
  // d nll / d log_probs(t, k), treating every lattice entry as free. Row t
  // equals minus the posterior occupancy of each unit at frame t.
  Matrix grad;

  // Gradient with respect to pre-softmax logits when the lattice is a
  // log-softmax output: exp(log_probs) + grad. Rows sum to zero.
  Matrix grad_logits(const Matrix& log_probs) const;
};

// Minimum frame count needed to emit `labels`: U plus one separating blank per
// adjacent repeat.
std::size_t ctc_min_frames(std::span<const std::int32_t> labels);

// Throws std::invalid_argument for a blank or out-of-range label.
void validate_labels(std::span<const std::int32_t> labels, std::size_t num_units);

// Forward-backward in log space over the blank-interleaved state graph.
// `log_probs` is T x |L'| with the blank in column 0. Throws
// CtcInfeasibleError when T < ctc_min_frames(labels).
CtcResult ctc_loss(const Matrix& log_probs, std::span<const std::int32_t> labels);

// Collapse map: merge repeats, then drop blanks.
LabelSeq ctc_collapse(std::span<const std::int32_t> path);

// p(labels | lattice) by enumerating all |L'|^T paths. Throws
// std::invalid_argument when |L'|^T exceeds 1e7.
double brute_force_ctc(const Matrix& log_probs, std::span<const std::int32_t> labels);

LabelSeq greedy_decode(const Matrix& log_probs);

// Prefix beam search without an external language model. Throws
// std::invalid_argument for width 0.
LabelSeq beam_decode(const Matrix& log_probs, std::size_t width);

namespace ag {

// 1x1 negative log-likelihood with the forward-backward gradient wired into
// the tape.
Var ctc_loss(Var log_probs, std::span<const std::int32_t> labels);

}  // namespace ag
}  // namespace emformer
