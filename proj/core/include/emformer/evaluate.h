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
#include <optional>
#include <span>
#include <vector>

#include "emformer/ctc.h"
#include "emformer/model.h"
#include "emformer/synthetic.h"

namespace emformer {

enum class DecodeMode { kGreedy, kBeam };

// Levenshtein distance over token ids.
std::size_t edit_distance(std::span<const std::int32_t> ref, std::span<const std::int32_t> hyp);

struct UtteranceResult {
  LabelSeq reference;
  LabelSeq hypothesis;
  std::size_t errors = 0;
};

struct EvalResult {
  double wer = 0.0;          // errors / ref_tokens
  double exact_match = 0.0;  // fraction of utterances decoded exactly
  std::size_t errors = 0;
  std::size_t ref_tokens = 0;
  std::vector<UtteranceResult> utterances;
};

struct EvalOptions {
  DecodeMode decode = DecodeMode::kGreedy;
  std::size_t beam_width = 8;
  // Inference look-ahead in ms; nullopt keeps the model's configured value.
  std::optional<std::int64_t> future_ms;
  // Frames per push to the streaming session.
  std::size_t chunk = 1;
};

LabelSeq decode(const Matrix& log_probs, DecodeMode mode, std::size_t beam_width);

// Streams every utterance of `stacked` through a StreamSession and scores the
// decoded tokens against the labels.
EvalResult evaluate(const EmformerModel& model, const Dataset& stacked,
                    const EvalOptions& options = {});

}  // namespace emformer
