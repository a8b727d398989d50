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

#include "emformer/model.h"

#include <cmath>
#include <random>

namespace emformer {

EmformerModel EmformerModel::random(const EmformerConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  EmformerModel model;
  model.config = cfg;
  model.input_w = Param("input.w", random_normal(cfg.input_dim, cfg.model_dim,
                                                 1.0 / std::sqrt(double(cfg.input_dim)), rng));
  model.input_b = Param("input.b", Matrix(1, cfg.model_dim));
  model.layers.reserve(cfg.num_layers);
  for (std::size_t n = 0; n < cfg.num_layers; ++n) {
    model.layers.push_back(EmformerLayer::random("layer" + std::to_string(n), cfg, rng));
  }
  model.output_w = Param("output.w", random_normal(cfg.model_dim, cfg.vocab_size,
                                                   1.0 / std::sqrt(double(cfg.model_dim)), rng));
  model.output_b = Param("output.b", Matrix(1, cfg.vocab_size));
  return model;
}

std::vector<Param*> EmformerModel::params() {
  std::vector<Param*> out{&input_w, &input_b};
  for (EmformerLayer& layer : layers) layer.collect(out);
  out.push_back(&output_w);
  out.push_back(&output_b);
  return out;
}

std::vector<const Param*> EmformerModel::params() const {
  std::vector<const Param*> out{&input_w, &input_b};
  for (const EmformerLayer& layer : layers) layer.collect(out);
  out.push_back(&output_w);
  out.push_back(&output_b);
  return out;
}

}  // namespace emformer
