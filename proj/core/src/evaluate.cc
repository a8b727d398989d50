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

#include "emformer/evaluate.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "emformer/dynlat.h"
#include "emformer/numkernel.h"
#include "emformer/streaming.h"

namespace emformer {

std::size_t edit_distance(std::span<const std::int32_t> ref, std::span<const std::int32_t> hyp) {
  std::vector<std::size_t> prev(hyp.size() + 1);
  std::vector<std::size_t> cur(hyp.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= hyp.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[hyp.size()];
}

LabelSeq decode(const Matrix& log_probs, DecodeMode mode, std::size_t beam_width) {
  return mode == DecodeMode::kBeam ? beam_decode(log_probs, beam_width)
                                   : greedy_decode(log_probs);
}

EvalResult evaluate(const EmformerModel& model, const Dataset& stacked,
                    const EvalOptions& options) {
  if (options.chunk == 0) throw std::invalid_argument("evaluate: chunk must be >= 1");
  std::optional<std::size_t> future;
  if (options.future_ms) future = ms_to_frames(*options.future_ms, model.config.frame_ms);

  EvalResult result;
  std::size_t exact = 0;
  for (const Example& ex : stacked) {
    const Matrix logits = stream_logits(model, ex.features.frames, options.chunk, future);
    UtteranceResult u;
    u.reference = ex.labels;
    u.hypothesis = decode(log_softmax_rows(logits), options.decode, options.beam_width);
    u.errors = edit_distance(u.reference, u.hypothesis);
    result.errors += u.errors;
    result.ref_tokens += u.reference.size();
    if (u.reference == u.hypothesis) ++exact;
    result.utterances.push_back(std::move(u));
  }
  if (result.ref_tokens > 0) {
    result.wer = static_cast<double>(result.errors) / static_cast<double>(result.ref_tokens);
  }
  if (!stacked.empty()) {
    result.exact_match = static_cast<double>(exact) / static_cast<double>(stacked.size());
  }
  return result;
}

}  // namespace emformer
