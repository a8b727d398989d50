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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "emformer/checkpoint.h"
#include "emformer/errors.h"
#include "emformer/evaluate.h"
#include "emformer/features.h"
#include "emformer/synthetic.h"
#include "emformer/train.h"
#include "emformer/train_config.h"
#include "test_util.h"

namespace emformer {
namespace {

TEST(StackFrames, IdentityForOne) {
  std::mt19937_64 rng(1);
  const FeatureSequence x{testing::rand_matrix(5, 3, rng), 10};
  EXPECT_EQ(stack_frames(x, 1), x);
}

TEST(StackFrames, PairsConcatenate) {
  const FeatureSequence x{Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}, {7, 8}}), 10};
  const FeatureSequence y = stack_frames(x, 2);
  EXPECT_EQ(y.frames, Matrix::from_rows({{1, 2, 3, 4}, {5, 6, 7, 8}}));
  EXPECT_EQ(y.frame_ms, 20);
}

TEST(StackFrames, IndexArithmeticWithPaddedTail) {
  std::mt19937_64 rng(2);
  const FeatureSequence x{testing::rand_matrix(11, 3, rng), 10};
  const std::size_t k = 4;
  const FeatureSequence y = stack_frames(x, k);
  ASSERT_EQ(y.num_frames(), 3u);
  ASSERT_EQ(y.dim(), 12u);
  for (std::size_t i = 0; i < y.num_frames(); ++i)
    for (std::size_t j = 0; j < y.dim(); ++j) {
      const std::size_t src = i * k + j / 3;
      EXPECT_EQ(y.frames(i, j), src < 11 ? x.frames(src, j % 3) : 0.0);
    }
  EXPECT_EQ(y.frame_ms, 40);
  EXPECT_THROW(stack_frames(x, 0), std::invalid_argument);
}

TEST(LrSchedule, LongRunShape) {
  TrainConfig cfg = default_train_config();
  cfg.peak_lr = 1e-4;
  cfg.warmup_steps = 20000;
  cfg.hold_steps = 100000;
  cfg.total_steps = 400000;
  EXPECT_EQ(lr_at(0, cfg), 0.0);
  EXPECT_EQ(lr_at(20000, cfg), 1e-4);
  EXPECT_EQ(lr_at(120000, cfg), 1e-4);
  EXPECT_NEAR(lr_at(260000, cfg), 5e-5, 1e-18);
  EXPECT_EQ(lr_at(400000, cfg), 0.0);
  EXPECT_NEAR(lr_at(10000, cfg), 5e-5, 1e-18);
}

TEST(LrSchedule, ContinuousPiecewiseLinear) {
  const TrainConfig cfg = default_train_config();
  const std::size_t decay = cfg.total_steps - cfg.warmup_steps - cfg.hold_steps;
  const double bound = cfg.peak_lr / double(std::min(cfg.warmup_steps, decay));
  for (std::size_t s = 0; s < cfg.total_steps + 5; ++s)
    EXPECT_LE(std::abs(lr_at(s + 1, cfg) - lr_at(s, cfg)), bound + 1e-18) << s;
}

TEST(Synthetic, NoiselessSingleSymbolEqualsTemplate) {
  SyntheticTask task;
  task.noise = 0.0;
  task.min_symbol_frames = task.max_symbol_frames = 5;
  task.min_frames = task.max_frames = 5;
  const Dataset data = gen_synthetic(task, 3, 4);
  const Matrix templates = symbol_templates(task);
  for (const Example& ex : data) {
    ASSERT_EQ(ex.labels.size(), 1u);
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t j = 0; j < task.feature_dim; ++j)
        EXPECT_EQ(ex.features.frames(t, j), templates(ex.labels[0], j));
  }
}

TEST(Synthetic, LabelsValidDeterministicAndFeasible) {
  const TrainConfig cfg = default_train_config();
  const Dataset a = gen_synthetic(cfg.task, 50, 9);
  const Dataset b = gen_synthetic(cfg.task, 50, 9);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].features, b[i].features);
    EXPECT_EQ(a[i].labels, b[i].labels);
    EXPECT_FALSE(a[i].labels.empty());
    EXPECT_GE(a[i].features.num_frames(), cfg.task.min_frames);
    EXPECT_LE(a[i].features.num_frames(), cfg.task.max_frames);
    for (std::size_t u = 0; u < a[i].labels.size(); ++u) {
      EXPECT_NE(a[i].labels[u], kBlank);
      EXPECT_LT(a[i].labels[u], static_cast<std::int32_t>(cfg.task.vocab_size));
      if (u > 0) EXPECT_NE(a[i].labels[u], a[i].labels[u - 1]);
    }
  }
  const Dataset stacked = stack_dataset(a, cfg.stack);
  for (const Example& ex : stacked) EXPECT_GE(ex.features.num_frames(), ctc_min_frames(ex.labels));
}

TEST(TrainConfigFile, RoundTripIsBitExact) {
  TrainConfig cfg = default_train_config();
  cfg.peak_lr = 0.1 + 0.2;
  cfg.task.noise = 1.0 / 3.0;
  cfg.future.options_ms = {0, 20, 100};
  std::ostringstream first;
  write_train_config(first, cfg);
  std::istringstream in(first.str());
  const TrainConfig back = read_train_config(in);
  EXPECT_EQ(back, cfg);
  std::ostringstream second;
  write_train_config(second, back);
  EXPECT_EQ(first.str(), second.str());
}

TEST(TrainConfigFile, CommentsDefaultsAndErrors) {
  std::istringstream in("# comment\n\nmodel.center_frames = 6\ntrain.peak_lr=0.002\n");
  const TrainConfig cfg = read_train_config(in);
  EXPECT_EQ(cfg.model.center_frames, 6u);
  EXPECT_EQ(cfg.peak_lr, 0.002);
  EXPECT_EQ(cfg.model.model_dim, default_train_config().model.model_dim);
  std::istringstream unknown("model.bogus=1\n");
  EXPECT_THROW(read_train_config(unknown), FormatError);
  std::istringstream malformed("model.heads\n");
  EXPECT_THROW(read_train_config(malformed), FormatError);
  std::istringstream bad_number("model.heads=two\n");
  EXPECT_THROW(read_train_config(bad_number), FormatError);
}

TEST(TrainConfigFile, Validation) {
  TrainConfig cfg = default_train_config();
  EXPECT_NO_THROW(cfg.validate());
  cfg.warmup_steps = cfg.total_steps;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = default_train_config();
  cfg.peak_lr = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = default_train_config();
  cfg.task.vocab_size = cfg.model.vocab_size = 1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const EmformerConfig cfg = testing::small_config(3, 1, 2, 4, 3);
  const EmformerModel model = EmformerModel::random(cfg, 5);
  std::ostringstream first;
  write_checkpoint(first, model);
  std::istringstream in(first.str());
  const EmformerModel back = read_checkpoint(in);
  EXPECT_EQ(back.config, model.config);
  const auto a = model.params();
  const auto b = back.params();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i]->value, b[i]->value);
  std::ostringstream second;
  write_checkpoint(second, back);
  EXPECT_EQ(first.str(), second.str());
}

TEST(Checkpoint, CorruptInputIsFormatError) {
  const EmformerModel model = EmformerModel::random(testing::small_config(2, 1, 2, 2), 6);
  std::ostringstream out;
  write_checkpoint(out, model);
  const std::string bytes = out.str();
  std::istringstream truncated(bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(read_checkpoint(truncated), FormatError);
  std::string bad = bytes;
  bad[0] = 'X';
  std::istringstream magic(bad);
  EXPECT_THROW(read_checkpoint(magic), FormatError);
}

TEST(FeatureFile, RoundTrip) {
  std::mt19937_64 rng(7);
  const FeatureSequence x{testing::rand_matrix(6, 4, rng), 20};
  std::ostringstream out;
  write_features(out, x);
  std::istringstream in(out.str());
  EXPECT_EQ(read_features(in), x);
  std::istringstream empty("");
  EXPECT_THROW(read_features(empty), FormatError);
}

std::size_t exhaustive_edit_distance(const LabelSeq& a, std::size_t i, const LabelSeq& b,
                                     std::size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  return std::min({exhaustive_edit_distance(a, i + 1, b, j) + 1,
                   exhaustive_edit_distance(a, i, b, j + 1) + 1,
                   exhaustive_edit_distance(a, i + 1, b, j + 1) + (a[i] == b[j] ? 0 : 1)});
}

TEST(EditDistance, ExamplesAndRecursiveOracle) {
  EXPECT_EQ(edit_distance(LabelSeq{1, 2, 3}, LabelSeq{1, 2, 3}), 0u);
  EXPECT_EQ(edit_distance(LabelSeq{1, 2, 3}, LabelSeq{1, 3}), 1u);
  EXPECT_EQ(edit_distance(LabelSeq{}, LabelSeq{4, 4}), 2u);
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::size_t> len(0, 6);
  std::uniform_int_distribution<std::int32_t> sym(1, 3);
  for (int trial = 0; trial < 200; ++trial) {
    LabelSeq a(len(rng)), b(len(rng));
    for (auto& s : a) s = sym(rng);
    for (auto& s : b) s = sym(rng);
    EXPECT_EQ(edit_distance(a, b), exhaustive_edit_distance(a, 0, b, 0));
  }
}

TEST(Evaluate, WerFromErrorCounts) {
  // A model whose head always prefers symbol 1 decodes "1" everywhere.
  TrainConfig cfg = default_train_config();
  EmformerModel model = EmformerModel::random(cfg.model, 3);
  model.output_w.value.fill(0.0);
  model.output_b.value.fill(0.0);
  model.output_b.value(0, 1) = 10.0;
  Dataset data(2);
  data[0].features.frames = Matrix(6, cfg.model.input_dim);
  data[0].labels = {1};
  data[1].features.frames = Matrix(6, cfg.model.input_dim);
  data[1].labels = {1, 2, 3};
  const EvalResult r = evaluate(model, data);
  EXPECT_EQ(r.errors, 2u);
  EXPECT_EQ(r.ref_tokens, 4u);
  EXPECT_DOUBLE_EQ(r.wer, 0.5);
  EXPECT_DOUBLE_EQ(r.exact_match, 0.5);
  EXPECT_EQ(r.utterances[1].hypothesis, (LabelSeq{1}));
}

TEST(Train, ZeroLearningRateLeavesParameters) {
  TrainConfig cfg = default_train_config();
  cfg.warmup_steps = 0;
  cfg.hold_steps = 0;
  cfg.total_steps = 1;
  cfg.batch_size = 2;
  const Dataset data = stack_dataset(gen_synthetic(cfg.task, 4, 1), cfg.stack);
  EmformerModel model = EmformerModel::random(cfg.model, 2);
  const EmformerModel before = model;
  const TrainResult r = train(cfg, data, model);
  ASSERT_EQ(r.log.size(), 1u);
  EXPECT_EQ(r.log[0].lr, 0.0);
  const auto a = before.params();
  const auto b = model.params();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i]->value, b[i]->value);
}

TEST(Train, LossDropsAndMetricsAreLogged) {
  TrainConfig cfg = default_train_config();
  cfg.warmup_steps = 20;
  cfg.hold_steps = 180;
  cfg.total_steps = 200;
  const Dataset data = stack_dataset(gen_synthetic(cfg.task, 64, 3), cfg.stack);
  EmformerModel model = EmformerModel::random(cfg.model, 4);
  const std::size_t batch[] = {0, 1, 2, 3, 4, 5, 6, 7};
  std::mt19937_64 rng(0);
  const double before = batch_loss_and_grad(model, data, batch, 40, 0.0, rng, nullptr);
  std::ostringstream metrics;
  TrainHooks hooks;
  hooks.metrics = &metrics;
  train(cfg, data, model, hooks);
  const double after = batch_loss_and_grad(model, data, batch, 40, 0.0, rng, nullptr);
  EXPECT_LT(after, before);

  std::istringstream lines(metrics.str());
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) {
    ++count;
    std::istringstream fields(line);
    std::size_t step;
    std::int64_t f;
    double loss, lr;
    ASSERT_TRUE(fields >> step >> f >> loss >> lr) << line;
    EXPECT_EQ(step, count);
    EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 3);
  }
  EXPECT_EQ(count, 200u);
}

TEST(Train, InfeasibleUtterancesAreSkippedWithWarning) {
  TrainConfig cfg = default_train_config();
  cfg.warmup_steps = 0;
  cfg.hold_steps = 0;
  cfg.total_steps = 2;
  cfg.batch_size = 3;
  Dataset data = stack_dataset(gen_synthetic(cfg.task, 1, 1), cfg.stack);
  data.front().labels.assign(data.front().features.num_frames() + 1, 1);
  EmformerModel model = EmformerModel::random(cfg.model, 2);
  std::ostringstream warnings;
  TrainHooks hooks;
  hooks.warnings = &warnings;
  const TrainResult r = train(cfg, data, model, hooks);
  EXPECT_EQ(r.skipped_utterances, 6u);
  EXPECT_NE(warnings.str().find("skipped"), std::string::npos);
}

TEST(Evaluate, GreedyIsChunkInvariantAndBeamAgrees) {
  TrainConfig cfg = default_train_config();
  cfg.warmup_steps = 20;
  cfg.hold_steps = 100;
  cfg.total_steps = 150;
  const Dataset train_set = stack_dataset(gen_synthetic(cfg.task, 100, 5), cfg.stack);
  const Dataset test_set = stack_dataset(gen_synthetic(cfg.task, 10, 6), cfg.stack);
  EmformerModel model = EmformerModel::random(cfg.model, 6);
  train(cfg, train_set, model);
  EvalOptions opt;
  const EvalResult base = evaluate(model, test_set, opt);
  for (std::size_t chunk : {3, 1000}) {
    opt.chunk = chunk;
    const EvalResult r = evaluate(model, test_set, opt);
    for (std::size_t i = 0; i < r.utterances.size(); ++i)
      EXPECT_EQ(r.utterances[i].hypothesis, base.utterances[i].hypothesis);
  }
  opt.chunk = 1;
  opt.decode = DecodeMode::kBeam;
  opt.beam_width = 1;
  const EvalResult beam = evaluate(model, test_set, opt);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < beam.utterances.size(); ++i)
    agree += beam.utterances[i].hypothesis == base.utterances[i].hypothesis;
  EXPECT_GE(agree, beam.utterances.size() - 1);
}

}  // namespace
}  // namespace emformer
