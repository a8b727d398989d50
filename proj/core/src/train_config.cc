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

#include "emformer/train_config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "emformer/errors.h"

namespace emformer {
namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw FormatError("config: cannot parse '" + text + "' for " + key);
  }
  return value;
}

std::string format_options(const std::vector<std::int64_t>& options) {
  std::string out;
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(options[i]);
  }
  return out;
}

std::vector<std::int64_t> parse_options(const std::string& key, const std::string& text) {
  std::vector<std::int64_t> options;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) options.push_back(parse_number<std::int64_t>(key, item));
  return options;
}

struct Field {
  const char* key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

#define EMF_SIZE_FIELD(KEY, EXPR)                                                   \
  Field {                                                                           \
    KEY, [](const TrainConfig& c) { return std::to_string(c.EXPR); },               \
        [](TrainConfig& c, const std::string& v) {                                  \
          c.EXPR = parse_number<std::remove_cvref_t<decltype(c.EXPR)>>(KEY, v);     \
        }                                                                           \
  }
#define EMF_DOUBLE_FIELD(KEY, EXPR)                                                            \
  Field {                                                                                      \
    KEY, [](const TrainConfig& c) { return format_double(c.EXPR); },                           \
        [](TrainConfig& c, const std::string& v) { c.EXPR = parse_number<double>(KEY, v); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      EMF_SIZE_FIELD("model.num_layers", model.num_layers),
      EMF_SIZE_FIELD("model.model_dim", model.model_dim),
      EMF_SIZE_FIELD("model.ffn_dim", model.ffn_dim),
      EMF_SIZE_FIELD("model.heads", model.heads),
      EMF_SIZE_FIELD("model.center_frames", model.center_frames),
      EMF_SIZE_FIELD("model.future_frames", model.future_frames),
      EMF_SIZE_FIELD("model.left_frames", model.left_frames),
      EMF_SIZE_FIELD("model.memory_capacity", model.memory_capacity),
      EMF_SIZE_FIELD("model.frame_ms", model.frame_ms),
      EMF_SIZE_FIELD("model.input_dim", model.input_dim),
      EMF_SIZE_FIELD("model.vocab_size", model.vocab_size),
      Field{"future.options_ms",
            [](const TrainConfig& c) { return format_options(c.future.options_ms); },
            [](TrainConfig& c, const std::string& v) {
              c.future.options_ms = parse_options("future.options_ms", v);
            }},
      EMF_SIZE_FIELD("future.seed", future.seed),
      EMF_SIZE_FIELD("task.vocab_size", task.vocab_size),
      EMF_SIZE_FIELD("task.feature_dim", task.feature_dim),
      EMF_SIZE_FIELD("task.frame_ms", task.frame_ms),
      EMF_SIZE_FIELD("task.min_symbol_frames", task.min_symbol_frames),
      EMF_SIZE_FIELD("task.max_symbol_frames", task.max_symbol_frames),
      EMF_SIZE_FIELD("task.max_gap_frames", task.max_gap_frames),
      EMF_SIZE_FIELD("task.min_frames", task.min_frames),
      EMF_SIZE_FIELD("task.max_frames", task.max_frames),
      EMF_DOUBLE_FIELD("task.noise", task.noise),
      EMF_SIZE_FIELD("task.template_seed", task.template_seed),
      EMF_SIZE_FIELD("train.stack", stack),
      EMF_DOUBLE_FIELD("train.peak_lr", peak_lr),
      EMF_SIZE_FIELD("train.warmup_steps", warmup_steps),
      EMF_SIZE_FIELD("train.hold_steps", hold_steps),
      EMF_SIZE_FIELD("train.total_steps", total_steps),
      EMF_SIZE_FIELD("train.batch_size", batch_size),
      EMF_DOUBLE_FIELD("train.dropout", dropout),
      EMF_DOUBLE_FIELD("train.clip_norm", clip_norm),
      EMF_SIZE_FIELD("train.utterances", train_utterances),
      EMF_SIZE_FIELD("train.seed", seed),
  };
  return table;
}

#undef EMF_SIZE_FIELD
#undef EMF_DOUBLE_FIELD

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

void SyntheticTask::validate() const {
  if (vocab_size < 2) throw std::invalid_argument("task: vocab_size must be >= 2 (blank + 1)");
  if (feature_dim == 0) throw std::invalid_argument("task: feature_dim must be >= 1");
  if (frame_ms <= 0) throw std::invalid_argument("task: frame_ms must be positive");
  if (min_symbol_frames == 0 || min_symbol_frames > max_symbol_frames) {
    throw std::invalid_argument("task: bad symbol duration range");
  }
  if (min_frames == 0 || min_frames > max_frames) {
    throw std::invalid_argument("task: bad utterance length range");
  }
  if (max_symbol_frames > min_frames) {
    throw std::invalid_argument("task: an utterance must fit at least one symbol");
  }
  if (noise < 0.0) throw std::invalid_argument("task: negative noise");
}

void TrainConfig::validate() const {
  model.validate();
  task.validate();
  validate_future_config(future, model.frame_ms);
  if (stack == 0) throw std::invalid_argument("train: stack must be >= 1");
  if (peak_lr <= 0.0) throw std::invalid_argument("train: peak_lr must be positive");
  if (warmup_steps + hold_steps > total_steps) {
    throw std::invalid_argument("train: warmup + hold exceeds total steps");
  }
  if (batch_size == 0) throw std::invalid_argument("train: batch_size must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("train: dropout in [0, 1)");
  if (clip_norm < 0.0) throw std::invalid_argument("train: negative clip_norm");
  if (train_utterances == 0) throw std::invalid_argument("train: no training utterances");
  if (model.input_dim != task.feature_dim * stack) {
    throw std::invalid_argument("train: model.input_dim must equal task.feature_dim * stack");
  }
  if (model.vocab_size != task.vocab_size) {
    throw std::invalid_argument("train: model and task vocab sizes differ");
  }
  if (model.frame_ms != task.frame_ms * static_cast<std::int64_t>(stack)) {
    throw std::invalid_argument("train: model.frame_ms must equal task.frame_ms * stack");
  }
}

TrainConfig default_train_config() {
  TrainConfig cfg;
  cfg.model.num_layers = 2;
  cfg.model.model_dim = 32;
  cfg.model.ffn_dim = 64;
  cfg.model.heads = 2;
  cfg.model.center_frames = 4;
  cfg.model.future_frames = 2;
  cfg.model.left_frames = 8;
  cfg.model.memory_capacity = 4;
  cfg.model.frame_ms = 20;
  cfg.model.input_dim = 16;
  cfg.model.vocab_size = 8;
  cfg.future.options_ms = {0, 40, 80};
  cfg.future.seed = 11;
  return cfg;
}

double lr_at(std::size_t step, const TrainConfig& cfg) {
  const double peak = cfg.peak_lr;
  if (step < cfg.warmup_steps) {
    return peak * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  }
  if (step <= cfg.warmup_steps + cfg.hold_steps) return peak;
  if (step >= cfg.total_steps) return 0.0;
  const std::size_t decay_len = cfg.total_steps - cfg.warmup_steps - cfg.hold_steps;
  const std::size_t remaining = cfg.total_steps - step;
  return peak * static_cast<double>(remaining) / static_cast<double>(decay_len);
}

void write_train_config(std::ostream& out, const TrainConfig& cfg) {
  for (const Field& f : fields()) out << f.key << '=' << f.get(cfg) << '\n';
}

TrainConfig read_train_config(std::istream& in) {
  std::map<std::string, const Field*> by_key;
  for (const Field& f : fields()) by_key.emplace(f.key, &f);

  TrainConfig cfg = default_train_config();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(text.substr(0, eq));
    const auto it = by_key.find(key);
    if (it == by_key.end()) {
      throw FormatError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    it->second->set(cfg, trim(text.substr(eq + 1)));
  }
  return cfg;
}

void save_train_config(const std::string& path, const TrainConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_train_config(out, cfg);
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_train_config(in);
}

}  // namespace emformer
