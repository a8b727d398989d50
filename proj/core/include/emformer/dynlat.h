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
#include <vector>

#include "emformer/config.h"
#include "emformer/layout.h"

namespace emformer {

// Discrete set of look-ahead lengths sampled during training, one draw per
// batch. All options share the same parameters.
struct FutureConfig {
  std::vector<std::int64_t> options_ms;
  std::uint64_t seed = 0;

  friend bool operator==(const FutureConfig&, const FutureConfig&) = default;
};

// Throws std::invalid_argument for an empty list, a negative option, or an
// option that is not a whole number of frames.
void validate_future_config(const FutureConfig& cfg, std::int64_t frame_ms);

// Uniform draw over cfg.options_ms, a pure function of (seed, step).
std::int64_t sample_future(const FutureConfig& cfg, std::uint64_t step);

// Layout with the look-ahead replaced by sampled_ms; center size and left
// context stay as configured. Throws std::invalid_argument when sampled_ms is
// not frame aligned.
BlockLayout apply_future(std::size_t num_frames, std::int64_t sampled_ms,
                         const EmformerConfig& cfg);

std::size_t ms_to_frames(std::int64_t ms, std::int64_t frame_ms);

}  // namespace emformer
