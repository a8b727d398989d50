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
#include <vector>

#include "emformer/ctc.h"
#include "emformer/features.h"
#include "emformer/train_config.h"

namespace emformer {

struct Example {
  FeatureSequence features;
  LabelSeq labels;
};

using Dataset = std::vector<Example>;

// Row s holds the template of symbol s; row 0 is the silence template. Depends
// only on task.template_seed, so every dataset of a task shares templates.
Matrix symbol_templates(const SyntheticTask& task);

// n utterances, deterministic in (task, seed). Adjacent symbols differ (or,
// with a single symbol, are separated by silence) so every label sequence is
// recoverable from the frames.
Dataset gen_synthetic(const SyntheticTask& task, std::size_t n, std::uint64_t seed);

// Applies stack_frames to every utterance.
Dataset stack_dataset(const Dataset& data, std::size_t k);

}  // namespace emformer
