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

#include <benchmark/benchmark.h>

#include <random>

#include "emformer/ctc.h"
#include "emformer/encoder.h"
#include "emformer/numkernel.h"
#include "emformer/streaming.h"
#include "emformer/synthetic.h"
#include "emformer/train.h"
#include "emformer/train_config.h"

namespace emformer {
namespace {

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const Matrix a = random_normal(n, n, 1.0, rng);
  const Matrix b = random_normal(n, n, 1.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

void BM_CtcLoss(benchmark::State& state) {
  const auto t = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  const Matrix lp = log_softmax_rows(random_normal(t, 8, 1.0, rng));
  LabelSeq y;
  for (std::size_t u = 0; u < t / 4; ++u) y.push_back(static_cast<std::int32_t>(1 + u % 7));
  for (auto _ : state) benchmark::DoNotOptimize(ctc_loss(lp, y));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(t));
}
BENCHMARK(BM_CtcLoss)->Arg(60)->Arg(240);

void BM_ParallelForward(benchmark::State& state) {
  const auto t = static_cast<std::size_t>(state.range(0));
  const TrainConfig cfg = default_train_config();
  const EmformerModel model = EmformerModel::random(cfg.model, 3);
  std::mt19937_64 rng(3);
  const Matrix x = random_normal(t, cfg.model.input_dim, 1.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(encoder_forward_parallel(model, x));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(t));
}
BENCHMARK(BM_ParallelForward)->Arg(30)->Arg(60);

// Per-frame cost of incremental inference.
void BM_StreamSession(benchmark::State& state) {
  const auto t = static_cast<std::size_t>(state.range(0));
  const TrainConfig cfg = default_train_config();
  const EmformerModel model = EmformerModel::random(cfg.model, 4);
  std::mt19937_64 rng(4);
  const Matrix x = random_normal(t, cfg.model.input_dim, 1.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(stream_encode(model, x, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(t));
}
BENCHMARK(BM_StreamSession)->Arg(30)->Arg(60);

void BM_TrainBatch(benchmark::State& state) {
  const TrainConfig cfg = default_train_config();
  EmformerModel model = EmformerModel::random(cfg.model, 5);
  const Dataset data = stack_dataset(gen_synthetic(cfg.task, cfg.batch_size, 5), cfg.stack);
  std::vector<std::size_t> batch(data.size());
  for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = i;
  std::mt19937_64 rng(5);
  for (auto _ : state)
    benchmark::DoNotOptimize(batch_loss_and_grad(model, data, batch, 40, cfg.dropout, rng, nullptr));
}
BENCHMARK(BM_TrainBatch)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace emformer

BENCHMARK_MAIN();
