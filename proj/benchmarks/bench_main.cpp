// Copyright 2026 The MCDRL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#include <numeric>
#include <vector>

#include <benchmark/benchmark.h>

#include "mcdrl/benchdata.hpp"
#include "mcdrl/cdrl.hpp"
#include "mcdrl/ops.hpp"
#include "mcdrl/rng.hpp"
#include "mcdrl/trainer.hpp"

namespace {

using namespace mcdrl;

Tensor random_tensor(Shape shape, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.mutable_data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Tensor a = random_tensor({n, n}, rng), b = random_tensor({n, n}, rng);
  for (auto _ : state) {
    Tape tape(Tape::Mode::kInference);
    benchmark::DoNotOptimize(ops::matmul(tape, a, b));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(64)->Arg(128);

void BM_Intervene(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  TextEncoder text(16, 2024);
  ConfounderDictionary dict = init_dictionary(default_confounder_prompts(), text, 3);
  std::vector<std::size_t> cells(n);
  std::iota(cells.begin(), cells.end(), 0);
  const RegionFeatures region{random_tensor({n, 16}, rng), cells, GridShape{1, n}};
  for (auto _ : state) {
    Tape tape(Tape::Mode::kInference);
    benchmark::DoNotOptimize(intervene(tape, region, dict));
  }
}
BENCHMARK(BM_Intervene)->Arg(19)->Arg(64);

void BM_TrainStep(benchmark::State& state) {
  const Dataset ds = generate_split(4, 7, default_sites(), 32, 32);
  TrainConfig cfg;
  cfg.ablation = static_cast<AblationMode>(state.range(0));
  Trainer trainer(cfg, ds.num_classes);
  std::vector<std::size_t> batch(16);
  std::iota(batch.begin(), batch.end(), 0);
  const StageSettings stage = stage_settings(cfg, cfg.epochs - 1);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.step(ds, batch, stage));
  state.SetLabel(std::string(mode_name(cfg.ablation)));
  state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_TrainStep)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_Predict(benchmark::State& state) {
  const Dataset ds = generate_split(1, 7, default_sites(), 32, 32);
  Trainer trainer(TrainConfig{}, ds.num_classes);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.model().predict(ds.samples[0].image, trainer.inference_settings()));
}
BENCHMARK(BM_Predict)->Unit(benchmark::kMicrosecond);

void BM_GenerateSample(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate_sample(++seed, seed % 5, default_sites()[2], 32, 32));
}
BENCHMARK(BM_GenerateSample);

}  // namespace

BENCHMARK_MAIN();
