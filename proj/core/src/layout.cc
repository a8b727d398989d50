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

#include "emformer/layout.h"

#include <algorithm>
#include <stdexcept>

#include "emformer/errors.h"

namespace emformer {

std::size_t BlockLayout::num_copies() const {
  std::size_t total = 0;
  for (const Block& b : blocks) total += b.future_size();
  return total;
}

std::vector<std::size_t> BlockLayout::copy_sources() const {
  std::vector<std::size_t> sources;
  sources.reserve(num_copies());
  for (const Block& b : blocks) {
    for (std::size_t t = b.future_begin; t < b.future_end; ++t) sources.push_back(t);
  }
  return sources;
}

std::vector<std::size_t> BlockLayout::visible_frames(std::size_t frame) const {
  const Block& b = blocks.at(block_of(frame));
  const std::size_t left_begin = b.center_begin > left_frames ? b.center_begin - left_frames : 0;
  std::vector<std::size_t> frames;
  for (std::size_t t = left_begin; t < b.future_end; ++t) frames.push_back(t);
  return frames;
}

std::size_t BlockLayout::dependency_end(std::size_t frame) const {
  return blocks.at(block_of(frame)).future_end;
}

BlockLayout build_layout(std::size_t num_frames, const EmformerConfig& cfg,
                         std::optional<std::size_t> future_override) {
  if (num_frames == 0) throw std::invalid_argument("build_layout: empty utterance");
  if (cfg.center_frames == 0) throw std::invalid_argument("build_layout: center_frames is 0");
  BlockLayout layout;
  layout.num_frames = num_frames;
  layout.center_frames = cfg.center_frames;
  layout.future_frames = future_override.value_or(cfg.future_frames);
  layout.left_frames = cfg.left_frames;

  std::size_t copy_offset = 0;
  for (std::size_t begin = 0; begin < num_frames; begin += cfg.center_frames) {
    Block b;
    b.center_begin = begin;
    b.center_end = std::min(num_frames, begin + cfg.center_frames);
    b.future_begin = b.center_end;
    b.future_end = std::min(num_frames, b.center_end + layout.future_frames);
    b.copy_offset = copy_offset;
    copy_offset += b.future_size();
    layout.blocks.push_back(b);
  }
  return layout;
}

std::vector<AttnMask> build_attention_masks(const BlockLayout& layout,
                                            const EmformerConfig& cfg) {
  const std::size_t num_blocks = layout.num_blocks();
  const std::size_t copies = layout.num_copies();
  const std::size_t frames = layout.num_frames;
  const std::size_t queries = copies + frames + num_blocks;

  // Query row -> owning block, and whether it is a summary row.
  std::vector<std::size_t> owner(queries);
  for (std::size_t i = 0; i < num_blocks; ++i) {
    const Block& b = layout.blocks[i];
    for (std::size_t r = 0; r < b.future_size(); ++r) owner[b.copy_offset + r] = i;
    for (std::size_t t = b.center_begin; t < b.center_end; ++t) owner[copies + t] = i;
    owner[copies + frames + i] = i;
  }

  std::vector<AttnMask> masks;
  masks.reserve(cfg.num_layers);
  for (std::size_t layer = 0; layer < cfg.num_layers; ++layer) {
    const std::size_t memory_cols = layer == 0 ? 0 : num_blocks;
    AttnMask mask(queries, memory_cols + copies + frames);
    for (std::size_t q = 0; q < queries; ++q) {
      const std::size_t i = owner[q];
      const Block& b = layout.blocks[i];
      const bool summary = q >= copies + frames;
      if (!summary && memory_cols > 0) {
        const std::size_t first = i > cfg.memory_capacity ? i - cfg.memory_capacity : 0;
        for (std::size_t j = first; j < i; ++j) mask.set(q, j, true);
      }
      for (std::size_t r = 0; r < b.future_size(); ++r) {
        mask.set(q, memory_cols + b.copy_offset + r, true);
      }
      const std::size_t left_begin =
          b.center_begin > layout.left_frames ? b.center_begin - layout.left_frames : 0;
      for (std::size_t t = left_begin; t < b.center_end; ++t) {
        mask.set(q, memory_cols + copies + t, true);
      }
      if (mask.visible_count(q) == 0) {
        throw DegenerateMaskError("build_attention_masks: query row " + std::to_string(q) +
                                  " sees nothing");
      }
    }
    masks.push_back(std::move(mask));
  }
  return masks;
}

}  // namespace emformer
