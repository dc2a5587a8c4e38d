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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "mma/active.hpp"
#include "mma/data.hpp"
#include "mma/harness.hpp"

namespace mma::cli {

// Per-dataset hyper-parameter block selectable with `preset:`.
struct Preset {
  std::string name;
  std::size_t filters = 32;  // network width of the reference image model; recorded, unused by the MLP
  double lambda_u = 75.0;
  double alpha = 0.75;
  double weight_decay = 0.02;
};

const std::vector<Preset>& builtin_presets();
const Preset& find_preset(const std::string& name);

struct SyntheticConfig {
  std::string layout = "line";  // line | circle | explicit
  double spacing = 1.0;
  SyntheticSpec spec = [] {
    SyntheticSpec s;
    s.classes = 4;
    s.samples_per_class = 500;
    s.test_per_class = 250;
    s.seed = 7;
    return s;
  }();
};

struct DatasetConfig {
  std::string source = "synthetic";  // synthetic | file
  SyntheticConfig synthetic;
  std::filesystem::path train_file;
  std::filesystem::path test_file;
  bool normalize = false;  // csv import only; rescales each file by its own range
};

struct CostsConfig {
  std::string grid = "table6";  // fixture name or CSV path
  std::vector<double> targets{90.5, 91.0, 91.5};
};

struct ExperimentConfig {
  std::string preset;
  std::size_t filters = 32;
  DatasetConfig dataset;
  TrainerConfig trainer;
  std::vector<std::string> strategies{"diff2.aug-direct", "random"};
  std::size_t n_clusters = 20;
  double beta = 1.0;
  std::size_t infod_subsample = 0;
  std::size_t aug_count = 2;
  SchedulePlan schedule;
  std::vector<std::size_t> budgets;  // empty: schedule.budget only
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::filesystem::path output_dir = "results";
  bool keep_checkpoints = false;
  std::size_t jobs = 1;
  CostsConfig costs;

  // Plans for every budget, ascending.
  std::vector<SchedulePlan> plans() const;
  std::vector<StrategySpec> strategy_specs() const;
  void validate() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

// Environment variables recognized as overrides, e.g. MMA_SCHEDULE_M0.
std::vector<std::string> override_variables();
void apply_env_overrides(YAML::Node& root, const EnvLookup& lookup);
EnvLookup process_env();

ExperimentConfig parse_config(const YAML::Node& root);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path, const EnvLookup& lookup = process_env());

YAML::Node to_yaml(const ExperimentConfig& config);
std::string dump_config(const ExperimentConfig& config);

SyntheticSpec resolve_synthetic(const SyntheticConfig& config);
SyntheticData load_dataset(const DatasetConfig& config);

// Stable 64-bit checksum of a byte string.
std::uint64_t checksum(const std::vector<std::uint8_t>& bytes);

}  // namespace mma::cli
