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

namespace emformer {

// Structural hyperparameters of the encoder. Context lengths are counted in
// (stacked) frames; frame_ms is the duration of one such frame.
struct EmformerConfig {
  std::size_t num_layers = 2;
  std::size_t model_dim = 32;
  std::size_t ffn_dim = 64;
  std::size_t heads = 2;
  std::size_t center_frames = 4;
  std::size_t future_frames = 2;
  std::size_t left_frames = 8;
  std::size_t memory_capacity = 4;
  std::int64_t frame_ms = 40;
  // Width of the feature frames fed to the input projection.
  std::size_t input_dim = 16;
  // Output units including the blank at index 0.
  std::size_t vocab_size = 8;

  // Throws std::invalid_argument on a broken invariant.
  void validate() const;

  friend bool operator==(const EmformerConfig&, const EmformerConfig&) = default;
};

}  // namespace emformer
