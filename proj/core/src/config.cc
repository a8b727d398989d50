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

#include "emformer/config.h"

#include <stdexcept>

namespace emformer {

void EmformerConfig::validate() const {
  if (num_layers == 0) throw std::invalid_argument("config: num_layers must be >= 1");
  if (model_dim == 0 || ffn_dim == 0) throw std::invalid_argument("config: zero dimension");
  if (heads == 0 || model_dim % heads != 0) {
    throw std::invalid_argument("config: heads must divide model_dim");
  }
  if (center_frames == 0) throw std::invalid_argument("config: center_frames must be >= 1");
  if (frame_ms <= 0) throw std::invalid_argument("config: frame_ms must be positive");
  if (input_dim == 0) throw std::invalid_argument("config: input_dim must be >= 1");
  if (vocab_size < 2) throw std::invalid_argument("config: vocab_size must include blank + 1");
}

}  // namespace emformer
