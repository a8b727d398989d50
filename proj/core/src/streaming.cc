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

#include "emformer/streaming.h"

#include <stdexcept>
#include <string>

#include "emformer/encoder.h"
#include "emformer/errors.h"

namespace emformer {

StreamSession::StreamSession(const EmformerModel& model, std::optional<std::size_t> future_frames)
    : model_(&model),
      future_(future_frames.value_or(model.config.future_frames)),
      caches_(model.config.num_layers),
      pending_(0, model.config.input_dim) {
  model.config.validate();
  banks_.emplace_back(0);
  for (std::size_t n = 1; n < model.config.num_layers; ++n) {
    banks_.emplace_back(model.config.memory_capacity);
  }
}

std::vector<Emission> StreamSession::push(const Matrix& frames) {
  if (finished_) throw std::logic_error("StreamSession: push after finish");
  if (frames.rows() == 0) return {};
  if (frames.cols() != model_->config.input_dim) {
    throw ShapeError("StreamSession: frame width " + std::to_string(frames.cols()) +
                     ", expected " + std::to_string(model_->config.input_dim));
  }
  const Matrix* parts[] = {&pending_, &frames};
  pending_ = concat_rows(parts);

  std::vector<Emission> out;
  const std::size_t center = model_->config.center_frames;
  while (pending_.rows() >= center + future_) {
    auto emitted = run_block(center, future_);
    out.insert(out.end(), std::make_move_iterator(emitted.begin()),
               std::make_move_iterator(emitted.end()));
  }
  return out;
}

std::vector<Emission> StreamSession::finish() {
  if (finished_) throw std::logic_error("StreamSession: finish called twice");
  std::vector<Emission> out;
  const std::size_t center = model_->config.center_frames;
  while (pending_.rows() > 0) {
    const std::size_t c = std::min(center, pending_.rows());
    const std::size_t r = std::min(future_, pending_.rows() - c);
    auto emitted = run_block(c, r);
    out.insert(out.end(), std::make_move_iterator(emitted.begin()),
               std::make_move_iterator(emitted.end()));
  }
  finished_ = true;
  return out;
}

std::vector<Emission> StreamSession::run_block(std::size_t center_rows, std::size_t future_rows) {
  const EmformerModel& model = *model_;
  const EmformerConfig& cfg = model.config;

  const Matrix raw = slice_rows(pending_, 0, center_rows + future_rows);
  const Matrix projected = linear(raw, model.input_w, &model.input_b);
  Matrix center = slice_rows(projected, 0, center_rows);
  Matrix right = slice_rows(projected, center_rows, center_rows + future_rows);

  std::vector<std::vector<double>> memories;
  memories.reserve(cfg.num_layers);
  for (std::size_t n = 0; n < cfg.num_layers; ++n) {
    BlockResult r = layer_forward_block(model.layers[n], cfg, center, right, caches_[n], banks_[n]);
    center = std::move(r.center_out);
    right = std::move(r.right_out);
    memories.push_back(std::move(r.memory));
  }
  // A block's memory vectors only become visible to later blocks.
  for (std::size_t n = 0; n + 1 < cfg.num_layers; ++n) {
    banks_[n + 1].push(std::move(memories[n]), block_index_);
  }

  const Matrix logits = output_logits(model, center);
  std::vector<Emission> out(center_rows);
  for (std::size_t i = 0; i < center_rows; ++i) {
    out[i].frame = emitted_ + i;
    out[i].encoded.assign(center.row(i).begin(), center.row(i).end());
    out[i].logits.assign(logits.row(i).begin(), logits.row(i).end());
  }
  emitted_ += center_rows;
  block_index_ += 1;
  pending_ = slice_rows(pending_, center_rows, pending_.rows());
  return out;
}

namespace {

Matrix stream_collect(const EmformerModel& model, const Matrix& features, std::size_t chunk,
                      std::optional<std::size_t> future_frames, bool logits) {
  if (chunk == 0) throw std::invalid_argument("stream_encode: chunk must be >= 1");
  StreamSession session(model, future_frames);
  const std::size_t width = logits ? model.config.vocab_size : model.config.model_dim;
  Matrix out(features.rows(), width);
  auto store = [&](const std::vector<Emission>& emissions) {
    for (const Emission& e : emissions) {
      const auto& row = logits ? e.logits : e.encoded;
      std::copy(row.begin(), row.end(), out.row(e.frame).begin());
    }
  };
  for (std::size_t begin = 0; begin < features.rows(); begin += chunk) {
    const std::size_t end = std::min(features.rows(), begin + chunk);
    store(session.push(slice_rows(features, begin, end)));
  }
  store(session.finish());
  return out;
}

}  // namespace

Matrix stream_encode(const EmformerModel& model, const Matrix& features, std::size_t chunk,
                     std::optional<std::size_t> future_frames) {
  return stream_collect(model, features, chunk, future_frames, false);
}

Matrix stream_logits(const EmformerModel& model, const Matrix& features, std::size_t chunk,
                     std::optional<std::size_t> future_frames) {
  return stream_collect(model, features, chunk, future_frames, true);
}

std::string ExactMs::to_string() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num / 2) + ".5";
}

ExactMs eil(const LatencySpec& spec) {
  if (spec.block_ms <= 0) throw std::invalid_argument("eil: block size must be positive");
  if (spec.future_ms < 0) throw std::invalid_argument("eil: future size must be non-negative");
  // (block + 2 * future) / 2, reduced.
  const std::int64_t twice = spec.block_ms + 2 * spec.future_ms;
  if (twice % 2 == 0) return {twice / 2, 1};
  return {twice, 2};
}

}  // namespace emformer
