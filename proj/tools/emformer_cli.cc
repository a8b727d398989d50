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

// emformer: train, evaluate and stream the Emformer CTC encoder.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include "emformer/checkpoint.h"
#include "emformer/ctc.h"
#include "emformer/dynlat.h"
#include "emformer/encoder.h"
#include "emformer/evaluate.h"
#include "emformer/features.h"
#include "emformer/streaming.h"
#include "emformer/synthetic.h"
#include "emformer/train.h"
#include "emformer/train_config.h"

namespace emformer {
namespace {

struct Options {
  std::string config;
  std::string checkpoint;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> future_ms;
  std::string decode = "greedy";
  std::size_t beam_width = 8;
  std::string input;
  std::string output;
  std::string metrics;
  std::size_t utterances = 200;
  std::size_t chunk = 1;
  std::optional<std::int64_t> block_ms;
};

TrainConfig config_from(const Options& o) {
  TrainConfig cfg = o.config.empty() ? default_train_config() : load_train_config(o.config);
  cfg.validate();
  return cfg;
}

DecodeMode decode_mode(const Options& o) {
  return o.decode == "beam" ? DecodeMode::kBeam : DecodeMode::kGreedy;
}

std::string join(const LabelSeq& y) {
  std::string out;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (i > 0) out += ' ';
    out += std::to_string(y[i]);
  }
  return out;
}

int run_train(const Options& o) {
  TrainConfig cfg = config_from(o);
  if (o.seed) cfg.seed = *o.seed;
  const Dataset data =
      stack_dataset(gen_synthetic(cfg.task, cfg.train_utterances, cfg.seed), cfg.stack);
  EmformerModel model = EmformerModel::random(cfg.model, cfg.seed);

  std::ofstream metrics_file;
  TrainHooks hooks;
  hooks.warnings = &std::cerr;
  if (o.metrics == "-") {
    hooks.metrics = &std::cout;
  } else if (!o.metrics.empty()) {
    metrics_file.open(o.metrics);
    if (!metrics_file) throw std::runtime_error("cannot open " + o.metrics);
    hooks.metrics = &metrics_file;
  }
  const TrainResult result = train(cfg, data, model, hooks);
  save_checkpoint(o.checkpoint, model);
  std::cerr << "trained " << result.log.size() << " steps, final loss "
            << (result.log.empty() ? 0.0 : result.log.back().loss) << ", wrote " << o.checkpoint
            << '\n';
  return 0;
}

int run_eval(const Options& o) {
  TrainConfig cfg = config_from(o);
  const EmformerModel model = load_checkpoint(o.checkpoint);
  const std::uint64_t seed = o.seed.value_or(cfg.seed + 1000);
  const Dataset data = stack_dataset(gen_synthetic(cfg.task, o.utterances, seed), cfg.stack);
  EvalOptions eo;
  eo.decode = decode_mode(o);
  eo.beam_width = o.beam_width;
  eo.future_ms = o.future_ms;
  eo.chunk = o.chunk;
  const EvalResult r = evaluate(model, data, eo);
  const std::int64_t future =
      o.future_ms.value_or(static_cast<std::int64_t>(model.config.future_frames) *
                           model.config.frame_ms);
  std::cout << "utterances\t" << data.size() << '\n'
            << "future_ms\t" << future << '\n'
            << "decode\t" << o.decode << '\n'
            << "errors\t" << r.errors << '\n'
            << "ref_tokens\t" << r.ref_tokens << '\n'
            << "wer\t" << r.wer << '\n'
            << "exact_match\t" << r.exact_match << '\n';
  return 0;
}

int run_stream(const Options& o) {
  const EmformerModel model = load_checkpoint(o.checkpoint);
  const EmformerConfig& mc = model.config;
  FeatureSequence x = load_features(o.input);
  if (x.frame_ms != mc.frame_ms) {
    if (x.frame_ms <= 0 || mc.frame_ms % x.frame_ms != 0) {
      throw std::invalid_argument("feature frame of " + std::to_string(x.frame_ms) +
                                  "ms does not divide the model frame of " +
                                  std::to_string(mc.frame_ms) + "ms");
    }
    x = stack_frames(x, static_cast<std::size_t>(mc.frame_ms / x.frame_ms));
  }
  std::optional<std::size_t> future;
  if (o.future_ms) future = ms_to_frames(*o.future_ms, mc.frame_ms);

  StreamSession session(model, future);
  Matrix logits(x.num_frames(), mc.vocab_size);
  std::cout << std::setprecision(17);
  auto emit = [&](const std::vector<Emission>& out) {
    for (const Emission& e : out) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < e.logits.size(); ++k)
        if (e.logits[k] > e.logits[best]) best = k;
      std::cout << e.frame << '\t' << best;
      for (double v : e.logits) std::cout << '\t' << v;
      std::cout << '\n';
      std::copy(e.logits.begin(), e.logits.end(), logits.row(e.frame).begin());
    }
  };
  for (std::size_t begin = 0; begin < x.num_frames(); begin += o.chunk) {
    const std::size_t end = std::min(x.num_frames(), begin + o.chunk);
    emit(session.push(slice_rows(x.frames, begin, end)));
  }
  emit(session.finish());
  std::cout << "tokens\t" << join(decode(log_softmax_rows(logits), decode_mode(o), o.beam_width))
            << '\n';
  return 0;
}

int run_eil(const Options& o) {
  std::int64_t block = 0;
  std::int64_t future = 0;
  if (o.block_ms) {
    block = *o.block_ms;
    future = o.future_ms.value_or(0);
  } else {
    const EmformerConfig mc = o.checkpoint.empty() ? config_from(o).model
                                                   : load_checkpoint(o.checkpoint).config;
    block = static_cast<std::int64_t>(mc.center_frames) * mc.frame_ms;
    future = o.future_ms.value_or(static_cast<std::int64_t>(mc.future_frames) * mc.frame_ms);
  }
  const ExactMs v = eil({block, future});
  std::cout << "block_ms\t" << block << "\nfuture_ms\t" << future << "\neil_ms\t"
            << v.to_string() << '\n';
  return 0;
}

int run_verify(const Options& o) {
  const EmformerModel model = load_checkpoint(o.checkpoint);
  const EmformerConfig& mc = model.config;
  std::optional<std::size_t> future;
  if (o.future_ms) future = ms_to_frames(*o.future_ms, mc.frame_ms);
  std::mt19937_64 rng(o.seed.value_or(1));
  std::uniform_int_distribution<std::size_t> frames(1, 8 * mc.center_frames);

  double worst = 0.0;
  bool chunk_exact = true;
  std::size_t probes = 0;
  std::size_t leaks = 0;
  for (std::size_t u = 0; u < o.utterances; ++u) {
    const std::size_t t = frames(rng);
    const Matrix x = random_normal(t, mc.input_dim, 1.0, rng);
    const Matrix parallel = encoder_forward_parallel(model, x, future);
    const Matrix streamed = stream_encode(model, x, 1, future);
    worst = std::max(worst, max_abs_diff(parallel, streamed));
    chunk_exact = chunk_exact && stream_encode(model, x, 1 + u % 5, future) == streamed;

    const BlockLayout layout = build_layout(t, mc, future);
    const std::size_t p = u % t;
    Matrix y = x;
    for (double& v : y.row(p)) v += 3.0;
    const Matrix perturbed = encoder_forward_parallel(model, y, future);
    for (std::size_t q = 0; q < t; ++q) {
      if (p < layout.dependency_end(q)) continue;
      ++probes;
      bool same = true;
      for (std::size_t j = 0; j < mc.model_dim; ++j) same = same && perturbed(q, j) == parallel(q, j);
      leaks += same ? 0 : 1;
    }
  }
  const bool eq = worst <= 1e-6 && chunk_exact;
  std::cout << (eq ? "PASS" : "FAIL") << " streaming/parallel: " << o.utterances
            << " utterances, max |diff| " << worst << ", chunking "
            << (chunk_exact ? "bit-exact" : "MISMATCH") << '\n';
  std::cout << (leaks == 0 ? "PASS" : "FAIL") << " look-ahead leak: " << probes << " probes, "
            << leaks << " changed\n";
  return eq && leaks == 0 ? 0 : 1;
}

int run_synth(const Options& o) {
  const TrainConfig cfg = config_from(o);
  const Dataset data = gen_synthetic(cfg.task, 1, o.seed.value_or(cfg.seed + 2000));
  save_features(o.output, data.front().features);
  std::cout << "frames\t" << data.front().features.num_frames() << "\nlabels\t"
            << join(data.front().labels) << '\n';
  return 0;
}

int run_init_config(const Options& o) {
  const TrainConfig cfg = default_train_config();
  if (o.output.empty() || o.output == "-") {
    write_train_config(std::cout, cfg);
  } else {
    save_train_config(o.output, cfg);
  }
  return 0;
}

}  // namespace
}  // namespace emformer

int main(int argc, char** argv) {
  using namespace emformer;
  CLI::App app{"Streaming Emformer CTC encoder"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  Options o;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Training config file (key=value)")
        ->check(CLI::ExistingFile);
  };
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", o.seed, "Random seed"); };
  auto add_future = [&](CLI::App* sub) {
    sub->add_option("--future-ms", o.future_ms, "Inference look-ahead in ms")
        ->check(CLI::NonNegativeNumber);
  };
  auto add_decode = [&](CLI::App* sub) {
    sub->add_option("--decode", o.decode, "Decoder")->check(CLI::IsMember({"greedy", "beam"}));
    sub->add_option("--beam-width", o.beam_width, "Beam width")->check(CLI::PositiveNumber);
  };
  auto add_chunk = [&](CLI::App* sub) {
    sub->add_option("--chunk", o.chunk, "Frames per push")->check(CLI::PositiveNumber);
  };

  CLI::App* train_cmd = app.add_subcommand("train", "Train on synthetic data, write a checkpoint");
  add_config(train_cmd);
  train_cmd->add_option("--checkpoint", o.checkpoint, "Output checkpoint")->required();
  add_seed(train_cmd);
  train_cmd->add_option("--metrics", o.metrics, "Metrics log path, '-' for stdout");

  CLI::App* eval_cmd = app.add_subcommand("eval", "Stream held-out synthetic data, report WER");
  add_config(eval_cmd);
  eval_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  add_seed(eval_cmd);
  add_future(eval_cmd);
  add_decode(eval_cmd);
  add_chunk(eval_cmd);
  eval_cmd->add_option("--utterances", o.utterances, "Held-out utterances")
      ->check(CLI::PositiveNumber);

  CLI::App* stream_cmd = app.add_subcommand("stream", "Stream a feature file, print logits");
  stream_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  stream_cmd->add_option("--input", o.input, "Feature file")->required()->check(CLI::ExistingFile);
  add_future(stream_cmd);
  add_decode(stream_cmd);
  add_chunk(stream_cmd);

  CLI::App* eil_cmd = app.add_subcommand("eil", "Print the encoder-induced latency");
  eil_cmd->add_option("--block-ms", o.block_ms, "Center block in ms")->check(CLI::PositiveNumber);
  add_future(eil_cmd);
  add_config(eil_cmd);
  eil_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint")->check(CLI::ExistingFile);

  CLI::App* verify_cmd =
      app.add_subcommand("verify", "Check streaming/parallel equivalence and look-ahead leaks");
  verify_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  add_seed(verify_cmd);
  add_future(verify_cmd);
  verify_cmd->add_option("--utterances", o.utterances, "Random utterances")
      ->check(CLI::PositiveNumber);

  CLI::App* synth_cmd = app.add_subcommand("synth", "Write one synthetic utterance");
  add_config(synth_cmd);
  add_seed(synth_cmd);
  synth_cmd->add_option("--output", o.output, "Feature file")->required();

  CLI::App* init_cmd = app.add_subcommand("init-config", "Print the default config");
  init_cmd->add_option("--output", o.output, "Output path, '-' for stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) return run_train(o);
    if (*eval_cmd) return run_eval(o);
    if (*stream_cmd) return run_stream(o);
    if (*eil_cmd) return run_eil(o);
    if (*verify_cmd) return run_verify(o);
    if (*synth_cmd) return run_synth(o);
    if (*init_cmd) return run_init_config(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
