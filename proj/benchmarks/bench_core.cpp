/*
 * Copyright 2026 The MMA Toolkit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <benchmark/benchmark.h>

#include <vector>

#include "mma/active.hpp"
#include "mma/costs.hpp"
#include "mma/harness.hpp"
#include "mma/mixmatch.hpp"
#include "mma/model.hpp"

namespace {

using namespace mma;

std::vector<LabeledPoint> random_points(std::size_t n, std::size_t dims, std::size_t classes, Rng& rng) {
  std::vector<LabeledPoint> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(dims);
    for (auto& v : x) v = rng.normal();
    out.push_back({x, ProbVector::one_hot(classes, rng.below(classes))});
  }
  return out;
}

std::vector<ScoredCandidate> random_pool(std::size_t n, std::size_t dims, Rng& rng) {
  std::vector<ScoredCandidate> c(n);
  for (std::size_t i = 0; i < n; ++i) {
    c[i].id = i;
    c[i].score = rng.uniform();
    for (std::size_t d = 0; d < dims; ++d) c[i].embedding.push_back(rng.normal());
  }
  return c;
}

void BM_Sharpen(benchmark::State& state) {
  Rng rng(1);
  std::vector<double> p(static_cast<std::size_t>(state.range(0)));
  for (auto& v : p) v = rng.uniform(0.01, 1.0);
  double s = 0.0;
  for (const double v : p) s += v;
  for (auto& v : p) v /= s;
  const ProbVector prob(p);
  for (auto _ : state) benchmark::DoNotOptimize(sharpen(prob, 0.5));
}
BENCHMARK(BM_Sharpen)->Arg(10)->Arg(100);

// One optimizer step on a MixMatch batch: assemble, loss graph, backward, Adam + EMA.
void BM_MixMatchStep(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  Classifier model(ModelShape{2, {64, 64}, 4, 0.1}, 3);
  OptimizerState opt(model, OptimizerConfig{});
  const auto x = random_points(b, 2, 4, rng);
  const auto u = random_points(b, 2, 4, rng);
  for (auto _ : state) {
    const auto batch = assemble(x, u, draw_mix(b, 0.75, rng));
    const auto g = gradient(model, [&](autodiff::Tape& t, const BoundModel& bm) {
      return mixmatch_loss_graph(t, bm, batch, 75.0);
    });
    train_step(model, opt, g.gradient);
    benchmark::DoNotOptimize(g.loss);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * b));
}
BENCHMARK(BM_MixMatchStep)->Arg(8)->Arg(32)->Arg(64);

void BM_BatchedForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  const Classifier model(ModelShape{2, {64, 64}, 4, 0.1}, 5);
  std::vector<double> data(n * 2);
  for (auto& v : data) v = rng.normal();
  const auto inputs = autodiff::Matrix::from(n, 2, data);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(inputs, true));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_BatchedForward)->Arg(256)->Arg(2000);

void BM_SelectDirect(benchmark::State& state) {
  Rng rng(6);
  const auto pool = random_pool(static_cast<std::size_t>(state.range(0)), 0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(select_direct(pool, 50));
}
BENCHMARK(BM_SelectDirect)->Arg(1000)->Arg(50000);

void BM_SelectKMeans(benchmark::State& state) {
  Rng rng(7);
  const auto pool = random_pool(static_cast<std::size_t>(state.range(0)), 64, rng);
  for (auto _ : state) benchmark::DoNotOptimize(select_kmeans(pool, 50, 20, 8));
}
BENCHMARK(BM_SelectKMeans)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_SelectInfoD(benchmark::State& state) {
  Rng rng(9);
  const auto pool = random_pool(static_cast<std::size_t>(state.range(0)), 64, rng);
  for (auto _ : state) benchmark::DoNotOptimize(select_infod(pool, 50, 1.0));
}
BENCHMARK(BM_SelectInfoD)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_SelectInfoDSubsampled(benchmark::State& state) {
  Rng rng(10);
  const auto pool = random_pool(static_cast<std::size_t>(state.range(0)), 64, rng);
  for (auto _ : state) benchmark::DoNotOptimize(select_infod(pool, 50, 1.0, 256, 11));
}
BENCHMARK(BM_SelectInfoDSubsampled)->Arg(4000)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_CostCurve(benchmark::State& state) {
  const auto grid = AccuracyGrid::parse_csv(fixture_csv("table6"));
  for (auto _ : state) benchmark::DoNotOptimize(cost_curve(grid, 91.5));
}
BENCHMARK(BM_CostCurve);

// A full short active-learning run on a small synthetic problem.
void BM_RunMma(benchmark::State& state) {
  SyntheticSpec spec;
  spec.classes = 4;
  spec.samples_per_class = 200;
  spec.means = {{-3, 0}, {-1, 0}, {1, 0}, {3, 0}};
  spec.test_per_class = 100;
  spec.seed = 7;
  const auto data = make_synthetic_split(spec);
  TrainerConfig cfg;
  cfg.mixmatch.lambda_u = 10.0;
  cfg.augmentation = {AugmentKind::kJitter, 0, 0.05};
  SchedulePlan plan;
  plan.m0 = 20;
  plan.query_size = 5;
  plan.budget = 40;
  plan.initial_steps = 200;
  plan.steps_per_interval = 50;
  plan.final_steps = 200;
  plan.checkpoint_every = 50;
  plan.eval_tail = 3;
  const auto strategy = StrategySpec::parse("diff2.aug-direct");
  for (auto _ : state) benchmark::DoNotOptimize(run_mma(plan, data.train, data.test, strategy, cfg, 0));
}
BENCHMARK(BM_RunMma)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
