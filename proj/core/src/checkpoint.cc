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

#include "emformer/checkpoint.h"

#include <fstream>
#include <stdexcept>

#include "binary_io.h"

namespace emformer {

void write_checkpoint(std::ostream& out, const EmformerModel& model) {
  const EmformerConfig& c = model.config;
  detail::write_bytes(out, std::string_view(kCheckpointMagic, 8));
  detail::write_u32(out, kCheckpointVersion);
  for (std::size_t v : {c.num_layers, c.model_dim, c.ffn_dim, c.heads, c.center_frames,
                        c.future_frames, c.left_frames, c.memory_capacity}) {
    detail::write_i64(out, static_cast<std::int64_t>(v));
  }
  detail::write_i64(out, c.frame_ms);
  detail::write_i64(out, static_cast<std::int64_t>(c.input_dim));
  detail::write_i64(out, static_cast<std::int64_t>(c.vocab_size));

  const auto params = model.params();
  detail::write_u64(out, params.size());
  for (const Param* p : params) {
    detail::write_u64(out, p->name.size());
    detail::write_bytes(out, p->name);
    detail::write_u64(out, p->value.rows());
    detail::write_u64(out, p->value.cols());
    for (double v : p->value.data()) detail::write_f64(out, v);
  }
}

EmformerModel read_checkpoint(std::istream& in) {
  detail::expect_magic(in, std::string_view(kCheckpointMagic, 8), "checkpoint");
  const std::uint32_t version = detail::read_u32(in, "checkpoint version");
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  auto count = [&](const char* what) {
    const std::int64_t v = detail::read_i64(in, what);
    if (v < 0) throw FormatError(std::string("checkpoint: negative ") + what);
    return static_cast<std::size_t>(v);
  };
  EmformerConfig c;
  c.num_layers = count("num_layers");
  c.model_dim = count("model_dim");
  c.ffn_dim = count("ffn_dim");
  c.heads = count("heads");
  c.center_frames = count("center_frames");
  c.future_frames = count("future_frames");
  c.left_frames = count("left_frames");
  c.memory_capacity = count("memory_capacity");
  c.frame_ms = detail::read_i64(in, "frame_ms");
  c.input_dim = count("input_dim");
  c.vocab_size = count("vocab_size");
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }

  EmformerModel model = EmformerModel::random(c, 0);
  const auto params = model.params();
  const std::uint64_t stored = detail::read_u64(in, "param count");
  if (stored != params.size()) {
    throw FormatError("checkpoint: " + std::to_string(stored) + " params, model has " +
                      std::to_string(params.size()));
  }
  for (Param* p : params) {
    const std::uint64_t name_len = detail::read_u64(in, "param name length");
    if (name_len > 4096) throw FormatError("checkpoint: implausible param name length");
    std::string name(name_len, '\0');
    detail::read_exact(in, name.data(), name.size(), "param name");
    if (name != p->name) throw FormatError("checkpoint: expected param " + p->name + ", got " + name);
    const std::uint64_t rows = detail::read_u64(in, "param rows");
    const std::uint64_t cols = detail::read_u64(in, "param cols");
    if (rows != p->value.rows() || cols != p->value.cols()) {
      throw FormatError("checkpoint: shape mismatch for " + name);
    }
    for (double& v : p->value.data()) v = detail::read_f64(in, "param data");
  }
  return model;
}

void save_checkpoint(const std::string& path, const EmformerModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_checkpoint(out, model);
}

EmformerModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_checkpoint(in);
}

}  // namespace emformer
