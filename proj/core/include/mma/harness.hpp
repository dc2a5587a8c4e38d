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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mma/active.hpp"
#include "mma/checkpoint.hpp"
#include "mma/data.hpp"
#include "mma/mixmatch.hpp"
#include "mma/model.hpp"

namespace mma {

// Label budget and training-step schedule of one run.
struct SchedulePlan {
  std::size_t m0 = 20;
  std::size_t query_size = 5;
  std::size_t budget = 60;
  std::uint64_t initial_steps = 2000;
  std::uint64_t steps_per_interval = 250;
  std::uint64_t final_steps = 2000;
  std::uint64_t checkpoint_every = 100;
  std::size_t eval_tail = 5;
  bool balanced_initial = false;

  std::size_t rounds() const noexcept { return (budget - m0) / query_size; }
  // Throws ConfigError naming the offending field.
  void validate(std::optional<std::size_t> dataset_size = std::nullopt) const;
  // True when the plans differ at most in `budget`.
  bool shares_prefix_with(const SchedulePlan& other) const;

  friend bool operator==(const SchedulePlan&, const SchedulePlan&) = default;
};

// Everything about training that is not the label schedule.
struct TrainerConfig {
  std::vector<std::size_t> hidden{64, 64};
  double leaky_slope = 0.1;
  OptimizerConfig optimizer{};
  MixMatchConfig mixmatch{};
  AugmentationPolicy augmentation{};

  void validate() const;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::string strategy;
  std::size_t budget = 0;
  std::vector<std::uint64_t> checkpoint_steps;
  std::vector<double> checkpoint_accuracies;  // percent, EMA parameters
  double final_metric = 0.0;                  // tail median, percent
  std::vector<std::vector<std::size_t>> labeled_history;  // L_0, L_1, ...
  double wall_clock_seconds = 0.0;

  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

// All fields except wall-clock time.
bool deterministic_equal(const RunRecord& a, const RunRecord& b);
// As deterministic_equal, also ignoring the strategy label.
bool same_trajectory(const RunRecord& a, const RunRecord& b);

// Median of the last min(eval_tail, n) values; lower median for even counts.
double tail_median(std::span<const double> accuracies, std::size_t eval_tail);

// Runs the MMA schedule step by step: initial training on L_0, query rounds
// interleaved with training intervals, then final training. All randomness
// comes from named streams of the run seed, so the trajectory is a pure
// function of (data, plan, strategy, config, seed).
class MmaTrainer {
 public:
  MmaTrainer(const Dataset& train, const Dataset& test, const StrategySpec& strategy, const TrainerConfig& config,
             const SchedulePlan& plan, std::uint64_t seed);

  // Initial sample and initial training; ends labeling interval 0.
  void start();
  // Scores U with a frozen EMA snapshot, reveals b labels, trains one interval.
  void query_round();
  // Final training and last evaluation.
  void finish();

  std::size_t rounds_done() const noexcept { return rounds_done_; }
  std::uint64_t steps_done() const noexcept { return optimizer_.step_count; }
  const Pool& pool() const noexcept { return pool_; }
  const Classifier& model() const noexcept { return model_; }
  std::size_t reveals() const noexcept { return reveals_; }
  RunRecord record() const;

  // State at the end of the current labeling interval.
  Checkpoint checkpoint() const;
  void restore(const Checkpoint& checkpoint);
  // Extends or shrinks the label budget of a resumed run.
  void set_plan(const SchedulePlan& plan);

 private:
  void train(std::uint64_t steps);
  void step();
  void evaluate();

  const Dataset* train_;
  const Dataset* test_;
  StrategySpec strategy_;
  TrainerConfig config_;
  SchedulePlan plan_;
  std::uint64_t seed_;

  Pool pool_;
  Classifier model_;
  OptimizerState optimizer_;
  Rng train_rng_;
  Rng query_rng_;

  std::size_t rounds_done_ = 0;
  std::size_t reveals_ = 0;
  bool started_ = false;
  std::vector<std::uint64_t> eval_steps_;
  std::vector<double> eval_accuracies_;
  std::vector<std::vector<std::size_t>> history_;
  double elapsed_ = 0.0;
};

struct RunOptions {
  // When set, interval checkpoints are written to <dir>/<run_id>/interval-<k>.ckpt.
  std::filesystem::path checkpoint_dir;
  std::string run_id;
};

std::string default_run_id(const StrategySpec& strategy, std::uint64_t seed);

RunRecord run_mma(const SchedulePlan& plan, const Dataset& train, const Dataset& test, const StrategySpec& strategy,
                  const TrainerConfig& config, std::uint64_t seed, const RunOptions& options = {});

// Plain MixMatch on the initial labeled set: initial_steps + final_steps of
// training and no queries. The plan's budget is ignored. Recorded under the
// strategy name "passive".
RunRecord run_passive(const SchedulePlan& plan, const Dataset& train, const Dataset& test,
                      const TrainerConfig& config, std::uint64_t seed);

// Plans with ascending budgets and otherwise identical schedules. Each
// larger budget resumes from the checkpoint stored at the end of the
// previous budget's last query interval.
std::vector<RunRecord> budget_sweep(const std::vector<SchedulePlan>& plans, const Dataset& train,
                                    const Dataset& test, const StrategySpec& strategy, const TrainerConfig& config,
                                    std::uint64_t seed, const RunOptions& options = {});

struct MetricSummary {
  std::string strategy;
  std::size_t budget = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single run
  std::size_t n_seeds = 0;
};

MetricSummary summarize(std::span<const double> metrics);
// One row per (strategy, budget), in first-appearance order.
std::vector<MetricSummary> summarize_runs(std::span<const RunRecord> runs);

struct RunJob {
  SchedulePlan plan;
  StrategySpec strategy;
  std::uint64_t seed = 0;
};

// Executes independent jobs on `workers` threads; results follow job order.
std::vector<RunRecord> run_jobs(std::span<const RunJob> jobs, const Dataset& train, const Dataset& test,
                                const TrainerConfig& config, std::size_t workers, const RunOptions& options = {});

// Every (strategy, plan) pair over `n_seeds` consecutive seeds from `first_seed`.
std::vector<RunRecord> repeat_runs(std::span<const SchedulePlan> plans, std::span<const StrategySpec> strategies,
                                   const Dataset& train, const Dataset& test, const TrainerConfig& config,
                                   std::size_t n_seeds, std::uint64_t first_seed = 0, std::size_t workers = 1);

}  // namespace mma
