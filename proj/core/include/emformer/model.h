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
#include "emformer/layer.h"
#include "emformer/numkernel.h"

namespace emformer {

// Input projection, a stack of Emformer layers and a CTC output head.
// Parameters are owned in place; copying a model deep-copies them.
struct EmformerModel {
  EmformerConfig config;
  Param input_w;
  Param input_b;
  std::vector<EmformerLayer> layers;
  Param output_w;
  Param output_b;

  static EmformerModel random(const EmformerConfig& cfg, std::uint64_t seed);

  // Fixed order: input projection, layers bottom-up, output head.
  std::vector<Param*> params();
  std::vector<const Param*> params() const;
};

}  // namespace emformer
