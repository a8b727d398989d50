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

#include "emformer/train.h"

#include <cmath>
#include <ostream>

#include "emformer/ctc.h"
#include "emformer/dynlat.h"
#include "emformer/encoder.h"
#include "emformer/errors.h"
#include "emformer/numkernel.h"

namespace emformer {

double batch_loss_and_grad(EmformerModel& model, const Dataset& stacked,
                           std::span<const std::size_t> batch, std::int64_t future_ms,
                           double dropout, std::mt19937_64& rng, std::size_t* skipped) {
  Tape tape;
  ParallelOptions options{dropout, &rng};
  std::vector<Var> losses;
  for (std::size_t idx : batch) {
    const Example& ex = stacked.at(idx);
    if (ex.features.num_frames() < ctc_min_frames(ex.labels)) {
      if (skipped != nullptr) ++*skipped;
      continue;
    }
    const BlockLayout layout = apply_future(ex.features.num_frames(), future_ms, model.config);
    const Var log_probs =
        log_probs_parallel(tape, model, tape.constant(ex.features.frames), layout, options);
    losses.push_back(ag::ctc_loss(log_probs, ex.labels));
  }
  const auto params = model.params();
  if (losses.empty()) {
    apply_gradients(params, {});
    return 0.0;
  }
  const Var total = losses.size() == 1 ? losses.front() : ag::sum(ag::concat_rows(losses));
  const Var mean = ag::scale(total, 1.0 / static_cast<double>(losses.size()));
  const double value = mean.value()(0, 0);
  apply_gradients(params, tape.backward(mean));
  return value;
}

double clip_gradients(std::span<Param* const> params, double max_norm) {
  double sq = 0.0;
  for (const Param* p : params)
    for (double g : p->grad.data()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (Param* p : params)
      for (double& g : p->grad.data()) g *= factor;
  }
  return norm;
}

TrainResult train(const TrainConfig& cfg, const Dataset& stacked, EmformerModel& model,
                  const TrainHooks& hooks) {
  cfg.validate();
  if (stacked.empty()) throw std::invalid_argument("train: empty dataset");
  if (!(model.config == cfg.model)) throw std::invalid_argument("train: model/config mismatch");

  TrainResult result;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, stacked.size() - 1);
  const auto params = model.params();

  for (std::size_t step = 1; step <= cfg.total_steps; ++step) {
    StepRecord rec;
    rec.step = step;
    rec.future_ms = sample_future(cfg.future, step);
    rec.lr = lr_at(step, cfg);

    std::vector<std::size_t> batch(cfg.batch_size);
    for (std::size_t& idx : batch) idx = pick(rng);
    rec.loss = batch_loss_and_grad(model, stacked, batch, rec.future_ms, cfg.dropout, rng,
                                   &rec.skipped);
    if (rec.skipped > 0 && hooks.warnings != nullptr) {
      *hooks.warnings << "warning: step " << step << " skipped " << rec.skipped
                      << " infeasible utterance(s)\n";
    }
    result.skipped_utterances += rec.skipped;
    clip_gradients(params, cfg.clip_norm);
    adam_step(params, AdamOptions{.lr = rec.lr});

    if (hooks.metrics != nullptr) {
      *hooks.metrics << rec.step << '\t' << rec.future_ms << '\t' << rec.loss << '\t' << rec.lr
                     << '\n';
    }
    result.log.push_back(rec);
    if (hooks.on_step && !hooks.on_step(rec)) break;
  }
  return result;
}

}  // namespace emformer
