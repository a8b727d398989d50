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

#include "emformer/config.h"
#include "emformer/dynlat.h"

namespace emformer {

// Desk-scale synthetic recognition task. Each symbol is a fixed random
// template held for a random number of frames, with optional silence between
// symbols and Gaussian noise on every frame.
struct SyntheticTask {
  // Output units including blank; symbols are 1 .. vocab_size - 1.
  std::size_t vocab_size = 8;
  std::size_t feature_dim = 8;
  std::int64_t frame_ms = 10;
  std::size_t min_symbol_frames = 4;
  std::size_t max_symbol_frames = 8;
  std::size_t max_gap_frames = 2;
  std::size_t min_frames = 40;
  std::size_t max_frames = 120;
  double noise = 0.3;
  std::uint64_t template_seed = 7;

  void validate() const;
  friend bool operator==(const SyntheticTask&, const SyntheticTask&) = default;
};

struct TrainConfig {
  EmformerConfig model;
  FutureConfig future;
  SyntheticTask task;
  // Raw frames per stacked encoder frame.
  std::size_t stack = 2;
  double peak_lr = 1e-3;
  std::size_t warmup_steps = 200;
  std::size_t hold_steps = 1000;
  std::size_t total_steps = 4000;
  std::size_t batch_size = 8;
  double dropout = 0.1;
  // Global gradient-norm clip; 0 disables.
  double clip_norm = 5.0;
  std::size_t train_utterances = 2000;
  std::uint64_t seed = 1;

  // Checks field ranges and the cross-field constraints tying the model to
  // the task (input width, vocabulary, frame duration).
  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Desk-scale defaults: the task above stacked by 2 into 20ms frames, 80ms
// blocks, 40ms look-ahead, dynamic look-ahead options {0, 40, 80} ms.
TrainConfig default_train_config();

// Tri-stage schedule: linear 0 -> peak over warmup, flat for hold, linear
// peak -> 0 until total. Steps past total return 0.
double lr_at(std::size_t step, const TrainConfig& cfg);

// Flat `key=value` text, one entry per line, fixed key order. Blank lines and
// lines starting with '#' are ignored when reading; unknown keys are errors,
// missing keys keep their defaults.
void write_train_config(std::ostream& out, const TrainConfig& cfg);
TrainConfig read_train_config(std::istream& in);
void save_train_config(const std::string& path, const TrainConfig& cfg);
TrainConfig load_train_config(const std::string& path);

}  // namespace emformer
