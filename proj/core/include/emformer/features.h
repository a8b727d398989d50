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
#include <iosfwd>
#include <string>

#include "emformer/matrix.h"

namespace emformer {

// T x d feature frames and the duration of one frame.
struct FeatureSequence {
  Matrix frames;
  std::int64_t frame_ms = 10;

  std::size_t num_frames() const { return frames.rows(); }
  std::size_t dim() const { return frames.cols(); }

  friend bool operator==(const FeatureSequence&, const FeatureSequence&) = default;
};

// Concatenates each run of k consecutive frames into one frame of width k*d.
// The tail is zero padded, so T' = ceil(T / k); frame_ms is multiplied by k.
FeatureSequence stack_frames(const FeatureSequence& x, std::size_t k);

// Binary feature file:
//   "EMFFEAT1" | u64 T | u64 d | i64 frame_ms | T*d f64, row-major
// All integers and doubles little-endian.
inline constexpr char kFeatureMagic[] = "EMFFEAT1";
void write_features(std::ostream& out, const FeatureSequence& x);
FeatureSequence read_features(std::istream& in);
void save_features(const std::string& path, const FeatureSequence& x);
FeatureSequence load_features(const std::string& path);

}  // namespace emformer
