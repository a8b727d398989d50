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
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "emformer/model.h"
#include "emformer/synthetic.h"
#include "emformer/train_config.h"

namespace emformer {

struct StepRecord {
  std::size_t step = 0;
  std::int64_t future_ms = 0;
  double loss = 0.0;
  double lr = 0.0;
  std::size_t skipped = 0;
};

struct TrainResult {
  std::vector<StepRecord> log;
  std::size_t skipped_utterances = 0;
};

struct TrainHooks {
  // Metrics sink: one "step\tfuture_ms\tloss\tlr" line per step.
  std::ostream* metrics = nullptr;
  // Warnings (skipped utterances).
  std::ostream* warnings = nullptr;
  // Called after every step; return false to stop early.
  std::function<bool(const StepRecord&)> on_step;
};

// Mean CTC loss of a batch under the parallel pass, with gradients written
// into the model's params. Utterances whose labels cannot be aligned are
// skipped and counted in `skipped`.
double batch_loss_and_grad(EmformerModel& model, const Dataset& stacked,
                           std::span<const std::size_t> batch, std::int64_t future_ms,
                           double dropout, std::mt19937_64& rng, std::size_t* skipped);

// Runs steps 1..cfg.total_steps on `stacked` (already frame-stacked) data.
// Each step samples a look-ahead, draws a batch, runs the masked parallel
// pass with dropout, backpropagates the CTC loss and takes an Adam step at
// lr_at(step).
TrainResult train(const TrainConfig& cfg, const Dataset& stacked, EmformerModel& model,
                  const TrainHooks& hooks = {});

// Rescales all gradients so their global L2 norm is at most max_norm. Returns
// the norm before clipping.
double clip_gradients(std::span<Param* const> params, double max_norm);

}  // namespace emformer
