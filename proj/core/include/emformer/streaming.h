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
#include <optional>
#include <string>
#include <vector>

#include "emformer/layer.h"
#include "emformer/matrix.h"
#include "emformer/model.h"

namespace emformer {

struct Emission {
  std::size_t frame = 0;
  std::vector<double> encoded;  // final-layer output, model_dim wide
  std::vector<double> logits;   // output head, vocab_size wide
};

// Incremental block-by-block inference over one utterance. The model must
// outlive the session. A block runs as soon as its center and look-ahead
// frames are buffered; emitted rows are final.
class StreamSession {
 public:
  explicit StreamSession(const EmformerModel& model,
                         std::optional<std::size_t> future_frames = std::nullopt);

  // `frames` is n x input_dim. Throws std::logic_error after finish().
  std::vector<Emission> push(const Matrix& frames);
  // Flushes the buffered tail with whatever look-ahead exists and closes the
  // session.
  std::vector<Emission> finish();

  bool finished() const { return finished_; }
  std::size_t emitted() const { return emitted_; }
  std::size_t pending() const { return pending_.rows(); }
  std::size_t blocks_processed() const { return block_index_; }
  std::size_t future_frames() const { return future_; }

  const KvCache& cache(std::size_t layer) const { return caches_.at(layer); }
  const MemoryBank& bank(std::size_t layer) const { return banks_.at(layer); }
  MemoryBank& mutable_bank(std::size_t layer) { return banks_.at(layer); }

 private:
  std::vector<Emission> run_block(std::size_t center_rows, std::size_t future_rows);

  const EmformerModel* model_;
  std::size_t future_;
  std::vector<KvCache> caches_;
  // banks_[n] holds memory vectors produced by layer n - 1; banks_[0] stays
  // empty.
  std::vector<MemoryBank> banks_;
  Matrix pending_;
  std::size_t emitted_ = 0;
  std::size_t block_index_ = 0;
  bool finished_ = false;
};

// Streams `features` through a fresh session in chunks of `chunk` frames and
// returns T x model_dim encoder output (or logits) in frame order.
Matrix stream_encode(const EmformerModel& model, const Matrix& features, std::size_t chunk,
                     std::optional<std::size_t> future_frames = std::nullopt);
Matrix stream_logits(const EmformerModel& model, const Matrix& features, std::size_t chunk,
                     std::optional<std::size_t> future_frames = std::nullopt);

// Latency of a configuration in milliseconds.
struct LatencySpec {
  std::int64_t block_ms = 0;
  std::int64_t future_ms = 0;
};

// Exact rational millisecond value num / den, den in {1, 2}.
struct ExactMs {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string to_string() const;
  friend bool operator==(const ExactMs&, const ExactMs&) = default;
};

// Average algorithmic latency over the frames of a center block:
// half the block plus the look-ahead. Throws std::invalid_argument for
// block_ms <= 0 or future_ms < 0.
ExactMs eil(const LatencySpec& spec);

}  // namespace emformer
