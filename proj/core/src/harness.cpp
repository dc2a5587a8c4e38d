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

#include "mma/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "mma/error.hpp"

namespace mma {

using autodiff::Matrix;

void SchedulePlan::validate(std::optional<std::size_t> dataset_size) const {
  if (query_size == 0) throw ConfigError("must be >= 1", "schedule.query_size");
  if (budget < m0) throw ConfigError("budget must be >= m0", "schedule.budget");
  if ((budget - m0) % query_size != 0) {
    throw ConfigError("budget - m0 must be a multiple of query_size", "schedule.budget");
  }
  if (checkpoint_every == 0) throw ConfigError("must be >= 1", "schedule.checkpoint_every");
  if (eval_tail == 0) throw ConfigError("must be >= 1", "schedule.eval_tail");
  if (initial_steps + rounds() * steps_per_interval + final_steps == 0) {
    throw ConfigError("schedule trains for zero steps", "schedule.initial_steps");
  }
  if (dataset_size && budget > *dataset_size) {
    throw ConfigError("budget " + std::to_string(budget) + " exceeds dataset size " + std::to_string(*dataset_size),
                      "schedule.budget");
  }
}

bool SchedulePlan::shares_prefix_with(const SchedulePlan& other) const {
  SchedulePlan a = *this;
  a.budget = other.budget;
  return a == other;
}

void TrainerConfig::validate() const {
  if (hidden.empty()) throw ConfigError("need at least one hidden layer", "model.hidden");
  for (const auto w : hidden) {
    if (w == 0) throw ConfigError("hidden widths must be positive", "model.hidden");
  }
  if (!(optimizer.learning_rate > 0.0)) throw ConfigError("must be > 0", "optimizer.learning_rate");
  if (optimizer.weight_decay < 0.0) throw ConfigError("must be >= 0", "optimizer.weight_decay");
  if (optimizer.ema_decay < 0.0 || optimizer.ema_decay > 1.0) throw ConfigError("must be in [0, 1]", "optimizer.ema_decay");
  mixmatch.validate();
  if (augmentation.shift_max < 0) throw ConfigError("must be >= 0", "augmentation.shift_max");
  if (augmentation.jitter_sigma < 0.0) throw ConfigError("must be >= 0", "augmentation.jitter_sigma");
}

nlohmann::json RunRecord::to_json() const {
  return nlohmann::json{{"seed", seed},
                        {"strategy", strategy},
                        {"budget", budget},
                        {"checkpoint_steps", checkpoint_steps},
                        {"accuracies", checkpoint_accuracies},
                        {"final_metric", final_metric},
                        {"labeled_history", labeled_history},
                        {"wall_clock_seconds", wall_clock_seconds}};
}

RunRecord RunRecord::from_json(const nlohmann::json& j) {
  RunRecord r;
  try {
    r.seed = j.at("seed").get<std::uint64_t>();
    r.strategy = j.at("strategy").get<std::string>();
    r.budget = j.at("budget").get<std::size_t>();
    r.checkpoint_steps = j.at("checkpoint_steps").get<std::vector<std::uint64_t>>();
    r.checkpoint_accuracies = j.at("accuracies").get<std::vector<double>>();
    r.final_metric = j.at("final_metric").get<double>();
    r.labeled_history = j.at("labeled_history").get<std::vector<std::vector<std::size_t>>>();
    r.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed run record: ") + e.what());
  }
  return r;
}

bool same_trajectory(const RunRecord& a, const RunRecord& b) {
  return a.seed == b.seed && a.budget == b.budget && a.checkpoint_steps == b.checkpoint_steps &&
         a.checkpoint_accuracies == b.checkpoint_accuracies && a.final_metric == b.final_metric &&
         a.labeled_history == b.labeled_history;
}

bool deterministic_equal(const RunRecord& a, const RunRecord& b) {
  return a.strategy == b.strategy && same_trajectory(a, b);
}

double tail_median(std::span<const double> accuracies, std::size_t eval_tail) {
  if (accuracies.empty()) throw PreconditionError("tail median of an empty accuracy list");
  if (eval_tail == 0) throw PreconditionError("tail window must be >= 1");
  const std::size_t m = std::min(eval_tail, accuracies.size());
  std::vector<double> tail(accuracies.end() - static_cast<std::ptrdiff_t>(m), accuracies.end());
  std::sort(tail.begin(), tail.end());
  return tail[(m - 1) / 2];
}

MmaTrainer::MmaTrainer(const Dataset& train, const Dataset& test, const StrategySpec& strategy,
                       const TrainerConfig& config, const SchedulePlan& plan, std::uint64_t seed)
    : train_(&train),
      test_(&test),
      strategy_(strategy),
      config_(config),
      plan_(plan),
      seed_(seed),
      pool_(train),
      model_(ModelShape{train.dims(), config.hidden, train.classes(), config.leaky_slope}, derive_seed(seed, "model")),
      optimizer_(model_, config.optimizer),
      train_rng_(Rng::stream(seed, "train")),
      query_rng_(Rng::stream(seed, "query")) {
  config_.validate();
  strategy_.validate();
  plan_.validate(train.size());
  if (test.size() == 0) throw ConfigError("evaluation split is empty", "dataset.test");
  if (test.dims() != train.dims() || test.classes() != train.classes()) {
    throw ConfigError("evaluation split does not match training data", "dataset.test");
  }
}

void MmaTrainer::set_plan(const SchedulePlan& plan) {
  plan.validate(train_->size());
  if (!plan.shares_prefix_with(plan_)) throw ConfigError("resumed plan differs beyond its budget", "schedule");
  if (plan.rounds() < rounds_done_) throw ConfigError("resumed plan has fewer rounds than already run", "schedule.budget");
  plan_ = plan;
}

void MmaTrainer::start() {
  if (started_) throw PreconditionError("trainer already started");
  started_ = true;
  pool_ = initial_sample(Pool(*train_), plan_.m0, plan_.balanced_initial, seed_);
  history_.push_back(pool_.labeled());
  train(plan_.initial_steps);
}

void MmaTrainer::query_round() {
  if (!started_) throw PreconditionError("trainer not started");
  if (rounds_done_ >= plan_.rounds()) throw PreconditionError("label budget already spent");
  const std::size_t b = plan_.query_size;

  std::vector<ScoredCandidate> candidates;
  if (strategy_.selector == Selector::kRandom) {
    for (const auto id : pool_.unlabeled()) candidates.push_back({id, 0.0, {}});
  } else {
    const ClassifierSnapshot snapshot(model_, /*use_ema=*/true);
    candidates = score_pool(snapshot, pool_, strategy_, config_.augmentation, query_rng_);
  }
  const auto round_seed = derive_seed(seed_, "select-" + std::to_string(rounds_done_));
  for (const auto id : select_batch(candidates, strategy_, b, round_seed)) {
    pool_.reveal_label(id);
    ++reveals_;
  }
  history_.push_back(pool_.labeled());
  ++rounds_done_;
  train(plan_.steps_per_interval);
}

void MmaTrainer::finish() {
  if (!started_) throw PreconditionError("trainer not started");
  while (rounds_done_ < plan_.rounds()) query_round();
  train(plan_.final_steps);
  if (eval_steps_.empty() || eval_steps_.back() != optimizer_.step_count) evaluate();
}

void MmaTrainer::train(std::uint64_t steps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint64_t i = 0; i < steps; ++i) step();
  elapsed_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void MmaTrainer::step() {
  const auto& ds = *train_;
  const auto& mm = config_.mixmatch;
  const std::size_t batch = mm.batch_size;
  const std::size_t classes = ds.classes();
  const auto& labeled = pool_.labeled();
  // With U exhausted, unlabeled batches are drawn from L (labels unused).
  const auto& unlabeled = pool_.unlabeled().empty() ? labeled : pool_.unlabeled();

  std::vector<LabeledPoint> x_hat;
  x_hat.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    const auto id = labeled[train_rng_.below(labeled.size())];
    x_hat.push_back({augment(ds.features(id), ds.image_shape(), config_.augmentation, train_rng_),
                     ProbVector::one_hot(classes, pool_.labeled_class(id))});
  }

  const std::size_t k = mm.augmentations;
  Matrix views(batch * k, ds.dims());
  for (std::size_t i = 0; i < batch; ++i) {
    const auto id = unlabeled[train_rng_.below(unlabeled.size())];
    for (std::size_t j = 0; j < k; ++j) {
      const auto v = augment(ds.features(id), ds.image_shape(), config_.augmentation, train_rng_);
      std::copy(v.begin(), v.end(), views.data.begin() + static_cast<std::ptrdiff_t>((i * k + j) * ds.dims()));
    }
  }
  // Guessing uses the raw training parameters.
  const auto guessed_probs = model_.forward(views, /*use_ema=*/false).probs;
  std::vector<LabeledPoint> u_hat;
  u_hat.reserve(batch);
  std::vector<ProbVector> preds(k);
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const auto row = guessed_probs.row(i * k + j);
      preds[j] = ProbVector(std::vector<double>(row.begin(), row.end()));
    }
    const auto first = views.row(i * k);
    u_hat.push_back({std::vector<double>(first.begin(), first.end()), guess_label(preds, mm.temperature)});
  }

  const auto draws = draw_mix(batch, mm.alpha, train_rng_);
  const auto mixed = assemble(x_hat, u_hat, draws);
  const double lambda_u = effective_lambda_u(mm, optimizer_.step_count);
  const auto grad = gradient(model_, [&](autodiff::Tape& tape, const BoundModel& bound) {
    return mixmatch_loss_graph(tape, bound, mixed, lambda_u, mm.unsquared_l2);
  });
  train_step(model_, optimizer_, grad.gradient);
  if (optimizer_.step_count % plan_.checkpoint_every == 0) evaluate();
}

void MmaTrainer::evaluate() {
  const auto& ds = *test_;
  Matrix inputs(ds.size(), ds.dims());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto f = ds.features(i);
    std::copy(f.begin(), f.end(), inputs.data.begin() + static_cast<std::ptrdiff_t>(i * ds.dims()));
  }
  const auto probs = model_.forward(inputs, /*use_ema=*/true).probs;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto row = probs.row(i);
    const auto pred = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    if (pred == ds.label(i)) ++correct;
  }
  eval_steps_.push_back(optimizer_.step_count);
  eval_accuracies_.push_back(100.0 * static_cast<double>(correct) / static_cast<double>(ds.size()));
}

RunRecord MmaTrainer::record() const {
  RunRecord r;
  r.seed = seed_;
  r.strategy = strategy_.name();
  r.budget = plan_.budget;
  r.checkpoint_steps = eval_steps_;
  r.checkpoint_accuracies = eval_accuracies_;
  r.final_metric = eval_accuracies_.empty() ? 0.0 : tail_median(eval_accuracies_, plan_.eval_tail);
  r.labeled_history = history_;
  r.wall_clock_seconds = elapsed_;
  return r;
}

Checkpoint MmaTrainer::checkpoint() const {
  if (!started_) throw PreconditionError("no state to checkpoint before start()");
  Checkpoint c;
  c.step_count = optimizer_.step_count;
  c.params = model_.params();
  c.ema_params = model_.ema_params();
  c.first_moment = optimizer_.first_moment;
  c.second_moment = optimizer_.second_moment;
  c.rng_states = {{"train", train_rng_.serialize()}, {"query", query_rng_.serialize()}};
  c.labeled_ids.assign(pool_.labeled().begin(), pool_.labeled().end());
  nlohmann::json progress{{"rounds_done", rounds_done_},
                          {"reveals", reveals_},
                          {"eval_steps", eval_steps_},
                          {"eval_accuracies", eval_accuracies_},
                          {"history", history_},
                          {"elapsed", elapsed_}};
  c.progress = progress.dump();
  return c;
}

void MmaTrainer::restore(const Checkpoint& c) {
  if (c.params.size() != model_.num_params()) throw FormatError("checkpoint does not match model shape");
  model_.params() = c.params;
  model_.ema_params() = c.ema_params;
  optimizer_.first_moment = c.first_moment;
  optimizer_.second_moment = c.second_moment;
  optimizer_.step_count = c.step_count;
  train_rng_ = Rng::deserialize(c.rng_state("train"));
  query_rng_ = Rng::deserialize(c.rng_state("query"));
  std::vector<std::size_t> ids(c.labeled_ids.begin(), c.labeled_ids.end());
  pool_ = Pool::with_labeled(*train_, ids);
  try {
    const auto progress = nlohmann::json::parse(c.progress);
    rounds_done_ = progress.at("rounds_done").get<std::size_t>();
    reveals_ = progress.at("reveals").get<std::size_t>();
    eval_steps_ = progress.at("eval_steps").get<std::vector<std::uint64_t>>();
    eval_accuracies_ = progress.at("eval_accuracies").get<std::vector<double>>();
    history_ = progress.at("history").get<std::vector<std::vector<std::size_t>>>();
    elapsed_ = progress.at("elapsed").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("corrupt checkpoint progress: ") + e.what());
  }
  started_ = true;
}

std::string default_run_id(const StrategySpec& strategy, std::uint64_t seed) {
  return strategy.name() + "-seed" + std::to_string(seed);
}

namespace {

std::filesystem::path interval_path(const RunOptions& options, const std::string& run_id, std::size_t k) {
  return options.checkpoint_dir / run_id / ("interval-" + std::to_string(k) + ".ckpt");
}

}  // namespace

RunRecord run_mma(const SchedulePlan& plan, const Dataset& train, const Dataset& test, const StrategySpec& strategy,
                  const TrainerConfig& config, std::uint64_t seed, const RunOptions& options) {
  MmaTrainer trainer(train, test, strategy, config, plan, seed);
  const auto run_id = options.run_id.empty() ? default_run_id(strategy, seed) : options.run_id;
  const bool save = !options.checkpoint_dir.empty();
  trainer.start();
  if (save) trainer.checkpoint().save(interval_path(options, run_id, 0));
  while (trainer.rounds_done() < plan.rounds()) {
    trainer.query_round();
    if (save) trainer.checkpoint().save(interval_path(options, run_id, trainer.rounds_done()));
  }
  trainer.finish();
  return trainer.record();
}

RunRecord run_passive(const SchedulePlan& plan, const Dataset& train, const Dataset& test,
                      const TrainerConfig& config, std::uint64_t seed) {
  SchedulePlan passive = plan;
  passive.budget = plan.m0;
  MmaTrainer trainer(train, test, StrategySpec::parse("random"), config, passive, seed);
  trainer.start();
  trainer.finish();
  auto record = trainer.record();
  record.strategy = "passive";
  return record;
}

std::vector<RunRecord> budget_sweep(const std::vector<SchedulePlan>& plans, const Dataset& train,
                                    const Dataset& test, const StrategySpec& strategy, const TrainerConfig& config,
                                    std::uint64_t seed, const RunOptions& options) {
  if (plans.empty()) return {};
  for (std::size_t i = 1; i < plans.size(); ++i) {
    if (!plans[i].shares_prefix_with(plans[0])) {
      throw ConfigError("sweep plans must differ only in budget", "schedule");
    }
    if (plans[i].budget <= plans[i - 1].budget) throw ConfigError("sweep budgets must be ascending", "schedule.budgets");
  }
  const auto run_id = options.run_id.empty() ? default_run_id(strategy, seed) : options.run_id;
  const bool on_disk = !options.checkpoint_dir.empty();
  std::map<std::size_t, std::vector<std::uint8_t>> in_memory;

  auto store = [&](const MmaTrainer& t) {
    const auto c = t.checkpoint();
    if (on_disk) {
      c.save(interval_path(options, run_id, t.rounds_done()));
    } else {
      in_memory[t.rounds_done()] = c.to_bytes();
    }
  };
  auto load = [&](std::size_t k) {
    return on_disk ? Checkpoint::load(interval_path(options, run_id, k)) : Checkpoint::from_bytes(in_memory.at(k));
  };

  std::vector<RunRecord> records;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    const auto& plan = plans[i];
    MmaTrainer trainer(train, test, strategy, config, plan, seed);
    if (i == 0) {
      trainer.start();
      store(trainer);
    } else {
      trainer.restore(load(plans[i - 1].rounds()));
    }
    while (trainer.rounds_done() < plan.rounds()) {
      trainer.query_round();
      store(trainer);
    }
    trainer.finish();
    records.push_back(trainer.record());
  }
  return records;
}

MetricSummary summarize(std::span<const double> metrics) {
  MetricSummary s;
  s.n_seeds = metrics.size();
  if (metrics.empty()) return s;
  double sum = 0.0;
  for (const double m : metrics) sum += m;
  s.mean = sum / static_cast<double>(metrics.size());
  if (metrics.size() > 1) {
    double ss = 0.0;
    for (const double m : metrics) ss += (m - s.mean) * (m - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(metrics.size() - 1));
  }
  return s;
}

std::vector<MetricSummary> summarize_runs(std::span<const RunRecord> runs) {
  std::vector<std::pair<std::string, std::size_t>> keys;
  std::map<std::pair<std::string, std::size_t>, std::vector<double>> groups;
  for (const auto& r : runs) {
    const auto key = std::make_pair(r.strategy, r.budget);
    if (!groups.contains(key)) keys.push_back(key);
    groups[key].push_back(r.final_metric);
  }
  std::vector<MetricSummary> out;
  for (const auto& key : keys) {
    auto s = summarize(groups[key]);
    s.strategy = key.first;
    s.budget = key.second;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<RunRecord> run_jobs(std::span<const RunJob> jobs, const Dataset& train, const Dataset& test,
                                const TrainerConfig& config, std::size_t workers, const RunOptions& options) {
  std::vector<RunRecord> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const auto i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        RunOptions opts = options;
        if (!opts.checkpoint_dir.empty()) {
          opts.run_id = default_run_id(jobs[i].strategy, jobs[i].seed) + "-b" + std::to_string(jobs[i].plan.budget);
        }
        results[i] = run_mma(jobs[i].plan, train, test, jobs[i].strategy, config, jobs[i].seed, opts);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
      }
    }
  };

  workers = std::max<std::size_t>(1, std::min(workers, jobs.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

std::vector<RunRecord> repeat_runs(std::span<const SchedulePlan> plans, std::span<const StrategySpec> strategies,
                                   const Dataset& train, const Dataset& test, const TrainerConfig& config,
                                   std::size_t n_seeds, std::uint64_t first_seed, std::size_t workers) {
  if (n_seeds < 1) throw ConfigError("need at least one seed", "seeds");
  std::vector<RunJob> jobs;
  for (const auto& strategy : strategies) {
    for (const auto& plan : plans) {
      for (std::size_t s = 0; s < n_seeds; ++s) jobs.push_back({plan, strategy, first_seed + s});
    }
  }
  return run_jobs(jobs, train, test, config, workers);
}

}  // namespace mma
