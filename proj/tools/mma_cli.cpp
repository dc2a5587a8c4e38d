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

// mma: run experiments, sweep budgets, analyze labeling costs, manage fixtures.

#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "mma/costs.hpp"
#include "mma/error.hpp"
#include "mma/harness.hpp"

namespace fs = std::filesystem;
using namespace mma;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct Flags {
  std::string config;
  std::string out;
  std::size_t jobs = 0;  // 0: take from config
  std::uint64_t seed_offset = 0;
  std::string grid;
  std::vector<double> targets;
};

cli::ExperimentConfig resolve(const Flags& f) {
  auto c = [&] {
    if (!f.config.empty()) return cli::load_config(f.config);
    YAML::Node root;
    cli::apply_env_overrides(root, cli::process_env());
    return cli::parse_config(root);
  }();
  if (!f.out.empty()) c.output_dir = f.out;
  if (f.jobs > 0) c.jobs = f.jobs;
  for (auto& s : c.seeds) s += f.seed_offset;
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

// Runs tasks on `workers` threads. Results are handed to `collect` on the
// calling thread, in task order, as soon as every earlier task is done.
template <class Result>
void run_pool(std::size_t n_tasks, std::size_t workers, const std::function<Result(std::size_t)>& task,
              const std::function<void(std::size_t, Result&)>& collect) {
  std::mutex mu;
  std::condition_variable cv;
  std::map<std::size_t, Result> ready;
  std::exception_ptr failure;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};

  const auto worker = [&] {
    while (!stop) {
      const auto i = next++;
      if (i >= n_tasks) return;
      try {
        auto r = task(i);
        std::lock_guard lock(mu);
        ready.emplace(i, std::move(r));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        stop = true;
      }
      cv.notify_all();
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < std::max<std::size_t>(1, std::min(workers, n_tasks)); ++t) threads.emplace_back(worker);

  for (std::size_t want = 0; want < n_tasks; ++want) {
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return ready.count(want) > 0 || failure; });
    if (failure) break;
    auto r = std::move(ready.at(want));
    ready.erase(want);
    lock.unlock();
    collect(want, r);
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct Loaded {
  cli::ExperimentConfig config;
  SyntheticData data;
  std::vector<SchedulePlan> plans;
  std::vector<StrategySpec> strategies;
};

Loaded prepare(const Flags& flags) {
  Loaded l;
  l.config = resolve(flags);
  l.config.validate();
  l.data = cli::load_dataset(l.config.dataset);
  l.plans = l.config.plans();
  for (const auto& p : l.plans) {
    p.validate(l.data.train.size());
  }
  l.strategies = l.config.strategy_specs();
  fs::create_directories(l.config.output_dir);
  write_text(l.config.output_dir / "config.yaml", cli::dump_config(l.config));
  return l;
}

// Single writer for every record file.
class Collector {
 public:
  explicit Collector(const fs::path& dir) : dir_(dir), jsonl_(dir / "runs.jsonl", std::ios::trunc) {
    if (!jsonl_) throw Error("cannot write " + (dir / "runs.jsonl").string());
  }

  void add(std::vector<RunRecord>& records) {
    for (auto& r : records) {
      jsonl_ << r.to_json().dump() << "\n";
      std::fprintf(stderr, "%s budget %zu seed %llu: %.2f%% (%.1fs)\n", r.strategy.c_str(), r.budget,
                   static_cast<unsigned long long>(r.seed), r.final_metric, r.wall_clock_seconds);
      records_.push_back(std::move(r));
    }
    jsonl_.flush();
  }

  void finish() {
    std::ostringstream csv;
    csv << "strategy,budget,mean,stddev,n_seeds\n";
    csv.precision(10);
    for (const auto& s : summarize_runs(records_)) {
      csv << s.strategy << "," << s.budget << "," << s.mean << "," << s.stddev << "," << s.n_seeds << "\n";
    }
    write_text(dir_ / "summary.csv", csv.str());
    std::cout << csv.str();
  }

 private:
  fs::path dir_;
  std::ofstream jsonl_;
  std::vector<RunRecord> records_;
};

int cmd_run(const Flags& flags) {
  auto l = prepare(flags);
  std::vector<RunJob> jobs;
  for (const auto& s : l.strategies) {
    for (const auto& p : l.plans) {
      for (const auto seed : l.config.seeds) jobs.push_back({p, s, seed});
    }
  }
  RunOptions base;
  if (l.config.keep_checkpoints) base.checkpoint_dir = l.config.output_dir / "checkpoints";
  Collector out(l.config.output_dir);
  run_pool<std::vector<RunRecord>>(
      jobs.size(), l.config.jobs,
      [&](std::size_t i) {
        auto opts = base;
        if (!opts.checkpoint_dir.empty()) {
          opts.run_id = default_run_id(jobs[i].strategy, jobs[i].seed) + "-b" + std::to_string(jobs[i].plan.budget);
        }
        return std::vector<RunRecord>{
            run_mma(jobs[i].plan, l.data.train, l.data.test, jobs[i].strategy, l.config.trainer, jobs[i].seed, opts)};
      },
      [&](std::size_t, std::vector<RunRecord>& r) { out.add(r); });
  out.finish();
  return 0;
}

int cmd_sweep(const Flags& flags) {
  auto l = prepare(flags);
  std::vector<std::pair<StrategySpec, std::uint64_t>> tasks;
  for (const auto& s : l.strategies) {
    for (const auto seed : l.config.seeds) tasks.emplace_back(s, seed);
  }
  Collector out(l.config.output_dir);
  run_pool<std::vector<RunRecord>>(
      tasks.size(), l.config.jobs,
      [&](std::size_t i) {
        const auto& [strategy, seed] = tasks[i];
        RunOptions opts;
        if (l.config.keep_checkpoints) {
          opts.checkpoint_dir = l.config.output_dir / "checkpoints";
          opts.run_id = default_run_id(strategy, seed);
        }
        return budget_sweep(l.plans, l.data.train, l.data.test, strategy, l.config.trainer, seed, opts);
      },
      [&](std::size_t, std::vector<RunRecord>& r) { out.add(r); });
  out.finish();
  return 0;
}

AccuracyGrid load_grid(const std::string& grid) {
  for (const auto& name : fixture_names()) {
    if (grid == name) return AccuracyGrid::parse_csv(fixture_csv(name));
  }
  if (!fs::is_regular_file(grid)) throw ConfigError("not a fixture name or file: " + grid, "costs.grid");
  return AccuracyGrid::load_csv(grid);
}

int cmd_costs(const Flags& flags) {
  const auto c = resolve(flags);
  const auto grid = load_grid(flags.grid.empty() ? c.costs.grid : flags.grid);
  const auto targets = flags.targets.empty() ? c.costs.targets : flags.targets;
  if (targets.empty()) throw ConfigError("at least one target is required", "costs.targets");
  std::vector<CostCurve> curves;
  for (const double t : targets) {
    try {
      auto curve = cost_curve(grid, t);
      for (const auto& d : curve.diagnostics) std::cerr << "warning: target " << t << ": " << d << "\n";
      curves.push_back(std::move(curve));
    } catch (const UnreachableTarget& e) {
      std::cerr << "warning: target " << t << " skipped: " << e.what() << "\n";
    }
  }
  const auto csv = curves_to_csv(curves);
  if (flags.out.empty()) {
    std::cout << csv;
  } else {
    write_text(flags.out, csv);
  }
  return 0;
}

int cmd_gen(const Flags& flags) {
  auto c = resolve(flags);
  if (c.dataset.source != "synthetic") throw ConfigError("gen needs a synthetic dataset", "dataset.source");
  const auto spec = cli::resolve_synthetic(c.dataset.synthetic);
  const fs::path dir = flags.out.empty() ? fs::path("data") : fs::path(flags.out);
  const auto data = make_synthetic_split(spec);
  fs::create_directories(dir);
  const auto emit = [&](const Dataset& d, const char* name) {
    const auto bytes = d.to_bytes();
    d.save(dir / name);
    std::printf("%s examples=%zu dims=%zu classes=%zu checksum=%016llx\n", (dir / name).string().c_str(), d.size(),
                d.dims(), d.classes(), static_cast<unsigned long long>(cli::checksum(bytes)));
  };
  emit(data.train, "train.bin");
  if (data.test.size() > 0) emit(data.test, "test.bin");
  return 0;
}

int cmd_fixtures(const Flags& flags) {
  const fs::path dir = flags.out.empty() ? fs::path("fixtures") : fs::path(flags.out);
  for (const auto& name : fixture_names()) {
    const auto path = dir / fixture_filename(name);
    write_text(path, std::string(fixture_csv(name)));
    std::printf("%s\n", path.string().c_str());
  }
  return 0;
}

std::string env_help() {
  std::string s = "Environment overrides (value parsed as YAML):\n";
  for (const auto& v : cli::override_variables()) s += "  " + v + "\n";
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MixMatch active-learning experiments and labeling cost analysis"};
  app.require_subcommand(1);
  app.footer(env_help());
  Flags flags;

  const auto common = [&](CLI::App* sub, bool experiment) {
    sub->add_option("--config", flags.config, "YAML experiment config");
    sub->add_option("--out", flags.out, experiment ? "output directory (overrides output.dir)" : "output path");
    if (experiment) {
      sub->add_option("--jobs", flags.jobs, "worker threads (overrides jobs)")->check(CLI::PositiveNumber);
      sub->add_option("--seed-offset", flags.seed_offset, "added to every seed");
    }
  };
  auto* run = app.add_subcommand("run", "train every strategy x budget x seed from scratch");
  common(run, true);
  auto* sweep = app.add_subcommand("sweep", "train each strategy x seed once, resuming across ascending budgets");
  common(sweep, true);
  auto* costs = app.add_subcommand("costs", "labeled-vs-unlabeled cost curves from an accuracy grid");
  common(costs, false);
  costs->add_option("--grid", flags.grid, "fixture name (table6, table7, table8) or CSV path");
  costs->add_option("--target", flags.targets, "target accuracy in percent; repeatable");
  auto* gen = app.add_subcommand("gen", "write the configured synthetic dataset as train.bin/test.bin");
  common(gen, false);
  auto* fixtures = app.add_subcommand("fixtures", "write the bundled accuracy grids as CSV");
  fixtures->add_option("--out", flags.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(flags);
    if (*sweep) return cmd_sweep(flags);
    if (*costs) return cmd_costs(flags);
    if (*gen) return cmd_gen(flags);
    if (*fixtures) return cmd_fixtures(flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
