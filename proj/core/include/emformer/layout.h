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
#include <vector>

#include "emformer/attention.h"
#include "emformer/config.h"

namespace emformer {

// One center block and its look-ahead. Indices are original frame indices,
// half-open.
struct Block {
  std::size_t center_begin = 0;
  std::size_t center_end = 0;
  std::size_t future_begin = 0;
  std::size_t future_end = 0;
  // First row of this block's future copies in the hard-copy region.
  std::size_t copy_offset = 0;

  std::size_t center_size() const { return center_end - center_begin; }
  std::size_t future_size() const { return future_end - future_begin; }
};

// Partition of an utterance into center blocks, with every block's future
// frames hard-copied to the head of the laid-out sequence:
//
//   [ copies of block 0 future | copies of block 1 future | ... | frame 0 .. frame T-1 ]
//
// The copies are processed as separate rows in every layer, so a block's
// look-ahead never reaches another block's computation.
struct BlockLayout {
  std::size_t num_frames = 0;
  std::size_t center_frames = 0;
  std::size_t future_frames = 0;
  std::size_t left_frames = 0;
  std::vector<Block> blocks;

  std::size_t num_blocks() const { return blocks.size(); }
  std::size_t num_copies() const;
  std::size_t sequence_length() const { return num_copies() + num_frames; }
  std::size_t block_of(std::size_t frame) const { return frame / center_frames; }
  // Frame index copied into each hard-copy row, in row order.
  std::vector<std::size_t> copy_sources() const;

  // Frames whose keys are visible to a frame of block `frame`'s block in a
  // single layer: left context, own center and own future.
  std::vector<std::size_t> visible_frames(std::size_t frame) const;
  // Exclusive upper bound of the input frames that may influence the encoder
  // output at `frame`, at any depth.
  std::size_t dependency_end(std::size_t frame) const;
};

// Throws std::invalid_argument for num_frames == 0.
BlockLayout build_layout(std::size_t num_frames, const EmformerConfig& cfg,
                         std::optional<std::size_t> future_override = std::nullopt);

// Attention masks for the parallel pass, one per layer.
//
// Query rows:  [ copies (num_copies) | centers (T) | summaries (B) ]
// Key columns: layer 0:  [ copies | centers ]
//              layer >0: [ memory (B) | copies | centers ]
//
// A copy or center query of block i sees the memory vectors of the
// memory_capacity blocks preceding i, the left_frames center frames before
// block i, the block's own center and its own copies. Summary queries see
// the same set minus memory. Throws DegenerateMaskError if any query row
// ends up empty.
std::vector<AttnMask> build_attention_masks(const BlockLayout& layout, const EmformerConfig& cfg);

}  // namespace emformer
