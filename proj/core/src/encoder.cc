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

#include "emformer/encoder.h"

#include <vector>

#include "emformer/attention.h"
#include "emformer/errors.h"

namespace emformer {
namespace {

Var maybe_dropout(Var v, const ParallelOptions& options) {
  if (options.dropout <= 0.0) return v;
  if (options.rng == nullptr) throw std::invalid_argument("dropout requested without an rng");
  return ag::dropout(v, options.dropout, *options.rng);
}

struct LayerState {
  Var copies;   // hard-copied future rows, num_copies x d
  Var centers;  // T x d
  Var memory;   // B x d memory vectors for the next layer
};

LayerState parallel_layer(Tape& tape, const EmformerLayer& layer, const BlockLayout& layout,
                          const AttnMask& mask, const LayerState& in, bool has_memory,
                          const ParallelOptions& options) {
  const std::size_t copies = layout.num_copies();
  const std::size_t frames = layout.num_frames;

  const Var x = ag::concat_rows(std::vector<Var>{in.copies, in.centers});
  const Var x_norm = ag::layer_norm(x, tape.param(layer.ln_attn_gain),
                                    tape.param(layer.ln_attn_bias), kLayerNormEps);

  std::vector<Var> query_parts{x_norm};
  for (const Block& b : layout.blocks) {
    query_parts.push_back(ag::mean_rows(in.centers, b.center_begin, b.center_end));
  }
  const Var queries = ag::concat_rows(query_parts);
  const Var keys = has_memory ? ag::concat_rows(std::vector<Var>{in.memory, x}) : x;

  const Var attended = ag::mha(tape, queries, keys, keys, layer.attn, &mask);
  const Var z = ag::add(maybe_dropout(ag::slice_rows(attended, 0, copies + frames), options), x);

  const Var z_norm = ag::layer_norm(z, tape.param(layer.ln_ffn_gain),
                                    tape.param(layer.ln_ffn_bias), kLayerNormEps);
  const Var out = ag::layer_norm(ag::add(maybe_dropout(ag::ffn(tape, z_norm, layer.ffn), options), z),
                                 tape.param(layer.ln_out_gain), tape.param(layer.ln_out_bias),
                                 kLayerNormEps);

  LayerState next;
  next.copies = ag::slice_rows(out, 0, copies);
  next.centers = ag::slice_rows(out, copies, copies + frames);
  next.memory = ag::slice_rows(attended, copies + frames, copies + frames + layout.num_blocks());
  return next;
}

}  // namespace

Var encoder_forward_parallel(Tape& tape, const EmformerModel& model, Var features,
                             const BlockLayout& layout, const ParallelOptions& options) {
  const EmformerConfig& cfg = model.config;
  if (features.rows() != layout.num_frames) {
    throw ShapeError("encoder_forward_parallel: " + std::to_string(features.rows()) +
                     " frames for a layout of " + std::to_string(layout.num_frames));
  }
  if (features.cols() != cfg.input_dim) {
    throw ShapeError("encoder_forward_parallel: feature width " + std::to_string(features.cols()) +
                     ", expected " + std::to_string(cfg.input_dim));
  }
  const std::vector<AttnMask> masks = build_attention_masks(layout, cfg);

  const Var input_b = tape.param(model.input_b);
  const Var projected = ag::linear(features, tape.param(model.input_w), &input_b);
  const std::vector<std::size_t> sources = layout.copy_sources();

  LayerState state;
  state.copies = ag::gather_rows(projected, sources);
  state.centers = projected;
  for (std::size_t n = 0; n < model.layers.size(); ++n) {
    state = parallel_layer(tape, model.layers[n], layout, masks[n], state, n > 0, options);
  }
  return state.centers;
}

Var log_probs_parallel(Tape& tape, const EmformerModel& model, Var features,
                       const BlockLayout& layout, const ParallelOptions& options) {
  const Var encoded = encoder_forward_parallel(tape, model, features, layout, options);
  const Var output_b = tape.param(model.output_b);
  return ag::log_softmax_rows(ag::linear(encoded, tape.param(model.output_w), &output_b));
}

Matrix encoder_forward_parallel(const EmformerModel& model, const Matrix& features,
                                std::optional<std::size_t> future_override) {
  const BlockLayout layout = build_layout(features.rows(), model.config, future_override);
  Tape tape;
  return encoder_forward_parallel(tape, model, tape.constant(features), layout).value();
}

Matrix logits_parallel(const EmformerModel& model, const Matrix& features,
                       std::optional<std::size_t> future_override) {
  return output_logits(model, encoder_forward_parallel(model, features, future_override));
}

Matrix output_logits(const EmformerModel& model, const Matrix& encoded) {
  return linear(encoded, model.output_w, &model.output_b);
}

}  // namespace emformer
