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
#include <iosfwd>
#include <string>

#include "emformer/model.h"

namespace emformer {

// Binary checkpoint:
//   "EMFCKPT1" | u32 version
//   11 x i64 config: num_layers model_dim ffn_dim heads center_frames
//                    future_frames left_frames memory_capacity frame_ms
//                    input_dim vocab_size
//   u64 param count
//   per param: u64 name length | name | u64 rows | u64 cols | rows*cols f64
// Little-endian throughout. Optimizer state is not stored.
inline constexpr char kCheckpointMagic[] = "EMFCKPT1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const EmformerModel& model);
EmformerModel read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const EmformerModel& model);
EmformerModel load_checkpoint(const std::string& path);

}  // namespace emformer
