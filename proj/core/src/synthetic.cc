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

#include "emformer/synthetic.h"

#include <random>

namespace emformer {
namespace {

void append_frames(std::vector<double>& data, std::span<const double> center, std::size_t count,
                   double noise, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < count; ++i) {
    for (double v : center) data.push_back(noise > 0.0 ? v + noise * gauss(rng) : v);
  }
}

}  // namespace

Matrix symbol_templates(const SyntheticTask& task) {
  task.validate();
  std::mt19937_64 rng(task.template_seed);
  Matrix templates = random_normal(task.vocab_size, task.feature_dim, 1.0, rng);
  // Silence sits near the origin, well away from the unit-variance symbols.
  for (double& v : templates.row(0)) v *= 0.1;
  return templates;
}

Dataset gen_synthetic(const SyntheticTask& task, std::size_t n, std::uint64_t seed) {
  const Matrix templates = symbol_templates(task);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> length(task.min_frames, task.max_frames);
  std::uniform_int_distribution<std::size_t> duration(task.min_symbol_frames,
                                                      task.max_symbol_frames);
  std::uniform_int_distribution<std::size_t> gap(0, task.max_gap_frames);
  std::uniform_int_distribution<std::int32_t> symbol(
      1, static_cast<std::int32_t>(task.vocab_size - 1));

  Dataset data;
  data.reserve(n);
  for (std::size_t u = 0; u < n; ++u) {
    const std::size_t target = length(rng);
    Example ex;
    std::vector<double> frames;
    std::size_t used = 0;
    while (true) {
      const std::size_t hold = duration(rng);
      if (used + hold > target) break;
      std::int32_t s = symbol(rng);
      // Redraw until different from the previous symbol (vocab 2 has one
      // symbol, so repeats are allowed there and separated by silence).
      while (task.vocab_size > 2 && !ex.labels.empty() && s == ex.labels.back()) s = symbol(rng);
      std::size_t pause = gap(rng);
      if (!ex.labels.empty()) {
        pause = std::min(pause, target - used - hold);
        if (task.vocab_size == 2) {
          if (target - used - hold == 0) break;
          pause = std::max<std::size_t>(pause, 1);
        }
        append_frames(frames, templates.row(0), pause, task.noise, rng);
        used += pause;
      }
      append_frames(frames, templates.row(static_cast<std::size_t>(s)), hold, task.noise, rng);
      used += hold;
      ex.labels.push_back(s);
    }
    append_frames(frames, templates.row(0), target - used, task.noise, rng);
    ex.features.frames = Matrix(target, task.feature_dim, std::move(frames));
    ex.features.frame_ms = task.frame_ms;
    data.push_back(std::move(ex));
  }
  return data;
}

Dataset stack_dataset(const Dataset& data, std::size_t k) {
  Dataset out;
  out.reserve(data.size());
  for (const Example& ex : data) out.push_back({stack_frames(ex.features, k), ex.labels});
  return out;
}

}  // namespace emformer
