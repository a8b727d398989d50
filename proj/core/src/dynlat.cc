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

#include "emformer/dynlat.h"

#include <random>
#include <stdexcept>
#include <string>

namespace emformer {

std::size_t ms_to_frames(std::int64_t ms, std::int64_t frame_ms) {
  if (frame_ms <= 0) throw std::invalid_argument("frame_ms must be positive");
  if (ms < 0) throw std::invalid_argument("negative duration " + std::to_string(ms) + "ms");
  if (ms % frame_ms != 0) {
    throw std::invalid_argument(std::to_string(ms) + "ms is not a multiple of the " +
                                std::to_string(frame_ms) + "ms frame");
  }
  return static_cast<std::size_t>(ms / frame_ms);
}

void validate_future_config(const FutureConfig& cfg, std::int64_t frame_ms) {
  if (cfg.options_ms.empty()) throw std::invalid_argument("future config: no options");
  for (std::int64_t option : cfg.options_ms) ms_to_frames(option, frame_ms);
}

std::int64_t sample_future(const FutureConfig& cfg, std::uint64_t step) {
  if (cfg.options_ms.empty()) throw std::invalid_argument("sample_future: no options");
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<std::size_t> pick(0, cfg.options_ms.size() - 1);
  return cfg.options_ms[pick(rng)];
}

BlockLayout apply_future(std::size_t num_frames, std::int64_t sampled_ms,
                         const EmformerConfig& cfg) {
  return build_layout(num_frames, cfg, ms_to_frames(sampled_ms, cfg.frame_ms));
}

}  // namespace emformer
