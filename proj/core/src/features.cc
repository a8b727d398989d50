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

#include "emformer/features.h"

#include <fstream>
#include <stdexcept>

#include "binary_io.h"

namespace emformer {

FeatureSequence stack_frames(const FeatureSequence& x, std::size_t k) {
  if (k == 0) throw std::invalid_argument("stack_frames: k must be >= 1");
  const std::size_t frames = x.num_frames();
  const std::size_t d = x.dim();
  const std::size_t stacked = (frames + k - 1) / k;
  FeatureSequence out;
  out.frames = Matrix(stacked, k * d);
  out.frame_ms = x.frame_ms * static_cast<std::int64_t>(k);
  for (std::size_t t = 0; t < frames; ++t) {
    const auto src = x.frames.row(t);
    std::copy(src.begin(), src.end(), out.frames.row(t / k).begin() + (t % k) * d);
  }
  return out;
}

void write_features(std::ostream& out, const FeatureSequence& x) {
  detail::write_bytes(out, std::string_view(kFeatureMagic, 8));
  detail::write_u64(out, x.num_frames());
  detail::write_u64(out, x.dim());
  detail::write_i64(out, x.frame_ms);
  for (double v : x.frames.data()) detail::write_f64(out, v);
}

FeatureSequence read_features(std::istream& in) {
  detail::expect_magic(in, std::string_view(kFeatureMagic, 8), "feature file");
  const std::uint64_t frames = detail::read_u64(in, "feature frame count");
  const std::uint64_t dim = detail::read_u64(in, "feature width");
  FeatureSequence x;
  x.frame_ms = detail::read_i64(in, "frame duration");
  if (x.frame_ms <= 0) throw FormatError("feature file: non-positive frame duration");
  if (dim != 0 && frames > (std::uint64_t{1} << 32) / dim) {
    throw FormatError("feature file: implausible size");
  }
  std::vector<double> data(frames * dim);
  for (double& v : data) v = detail::read_f64(in, "feature data");
  x.frames = Matrix(frames, dim, std::move(data));
  return x;
}

void save_features(const std::string& path, const FeatureSequence& x) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_features(out, x);
}

FeatureSequence load_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_features(in);
}

}  // namespace emformer
