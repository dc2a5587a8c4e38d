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

#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <set>
#include <string_view>

#include "mma/error.hpp"
#include "mma/rng.hpp"

namespace mma::cli {
namespace {

template <class T>
const char* type_name() {
  if constexpr (std::is_same_v<T, bool>) return "a boolean";
  else if constexpr (std::is_same_v<T, std::string>) return "a string";
  else if constexpr (std::is_floating_point_v<T>) return "a number";
  else if constexpr (std::is_integral_v<T>) return "a non-negative integer";
  else return "a list";
}

// Reads one mapping, rejecting keys it never consumed.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError("expected a mapping", path_.empty() ? "<root>" : path_);
  }

  std::string field(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

  bool has(const char* key) const { return node_ && node_.IsMap() && node_[key]; }

  template <class T>
  bool read(const char* key, T& out) {
    seen_.insert(key);
    if (!has(key)) return false;
    try {
      out = node_[key].as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(std::string("expected ") + type_name<T>(), field(key));
    }
    return true;
  }

  Section child(const char* key) {
    seen_.insert(key);
    return Section(has(key) ? node_[key] : YAML::Node(), field(key));
  }

  YAML::Node raw(const char* key) {
    seen_.insert(key);
    return has(key) ? node_[key] : YAML::Node();
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw ConfigError("unknown key", field(key));
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

// Scalar and list keys an MMA_ variable may override.
const std::vector<std::string>& override_paths() {
  static const std::vector<std::string> paths{
      "preset",
      "dataset.source",
      "dataset.train_file",
      "dataset.test_file",
      "dataset.normalize",
      "dataset.synthetic.classes",
      "dataset.synthetic.samples_per_class",
      "dataset.synthetic.test_per_class",
      "dataset.synthetic.dims",
      "dataset.synthetic.seed",
      "dataset.synthetic.layout",
      "dataset.synthetic.spacing",
      "model.hidden",
      "model.leaky_slope",
      "model.filters",
      "optimizer.learning_rate",
      "optimizer.weight_decay",
      "optimizer.ema_decay",
      "mixmatch.temperature",
      "mixmatch.augmentations",
      "mixmatch.alpha",
      "mixmatch.lambda_u",
      "mixmatch.ramp_steps",
      "mixmatch.batch_size",
      "mixmatch.unsquared_l2",
      "augmentation.kind",
      "augmentation.shift_max",
      "augmentation.jitter_sigma",
      "strategies",
      "strategy_options.n_clusters",
      "strategy_options.beta",
      "strategy_options.infod_subsample",
      "strategy_options.aug_count",
      "schedule.m0",
      "schedule.query_size",
      "schedule.budget",
      "schedule.budgets",
      "schedule.initial_steps",
      "schedule.steps_per_interval",
      "schedule.final_steps",
      "schedule.checkpoint_every",
      "schedule.eval_tail",
      "schedule.balanced_initial",
      "seeds",
      "output.dir",
      "output.checkpoints",
      "jobs",
      "costs.grid",
      "costs.targets",
  };
  return paths;
}

std::string env_name(const std::string& path) {
  std::string out = "MMA_";
  for (const char c : path) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    parts.push_back(path.substr(start, dot - start));
    if (dot == std::string::npos) return parts;
    start = dot + 1;
  }
}

YAML::Node image_node(const ImageShape& s) {
  YAML::Node n(YAML::NodeType::Sequence);
  n.push_back(s.height);
  n.push_back(s.width);
  n.push_back(s.channels);
  return n;
}

// Shortest text that reads back to the same double.
YAML::Node num(double v) {
  char buf[32];
  const auto end = std::to_chars(buf, buf + sizeof buf, v).ptr;
  return YAML::Node(std::string(buf, end));
}

template <class T>
YAML::Node flow_list(const std::vector<T>& values) {
  YAML::Node n(YAML::NodeType::Sequence);
  for (const auto& v : values) {
    if constexpr (std::is_floating_point_v<T>) {
      n.push_back(num(v));
    } else {
      n.push_back(v);
    }
  }
  n.SetStyle(YAML::EmitterStyle::Flow);
  return n;
}

}  // namespace

const std::vector<Preset>& builtin_presets() {
  static const std::vector<Preset> presets{
      {"cifar10", 32, 75.0, 0.75, 0.02},
      {"cifar100", 128, 150.0, 0.75, 0.04},
      {"svhn", 32, 250.0, 0.75, 0.02},
      {"svhn_extra", 32, 250.0, 0.25, 0.0001},
  };
  return presets;
}

const Preset& find_preset(const std::string& name) {
  for (const auto& p : builtin_presets()) {
    if (p.name == name) return p;
  }
  throw ConfigError("unknown preset '" + name + "' (cifar10, cifar100, svhn, svhn_extra)", "preset");
}

std::vector<SchedulePlan> ExperimentConfig::plans() const {
  auto b = budgets.empty() ? std::vector<std::size_t>{schedule.budget} : budgets;
  std::sort(b.begin(), b.end());
  std::vector<SchedulePlan> out;
  for (const auto budget : b) {
    auto p = schedule;
    p.budget = budget;
    out.push_back(p);
  }
  return out;
}

std::vector<StrategySpec> ExperimentConfig::strategy_specs() const {
  std::vector<StrategySpec> out;
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    StrategySpec s;
    try {
      s = StrategySpec::parse(strategies[i]);
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), "strategies[" + std::to_string(i) + "]");
    }
    s.n_clusters = n_clusters;
    s.beta = beta;
    s.infod_subsample = infod_subsample;
    s.aug_count = aug_count;
    s.validate();
    out.push_back(s);
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (!preset.empty()) find_preset(preset);
  trainer.validate();
  if (strategies.empty()) throw ConfigError("at least one strategy is required", "strategies");
  strategy_specs();
  if (seeds.empty()) throw ConfigError("at least one seed is required", "seeds");
  if (jobs < 1) throw ConfigError("must be >= 1", "jobs");
  if (output_dir.empty()) throw ConfigError("must not be empty", "output.dir");

  std::optional<std::size_t> pool_size;
  if (dataset.source == "synthetic") {
    const auto spec = resolve_synthetic(dataset.synthetic);
    pool_size = spec.classes * spec.samples_per_class;
    if (spec.test_per_class == 0) throw ConfigError("must be > 0 for training runs", "dataset.synthetic.test_per_class");
  } else if (dataset.source == "file") {
    if (dataset.train_file.empty()) throw ConfigError("required when source is file", "dataset.train_file");
    if (dataset.test_file.empty()) throw ConfigError("required when source is file", "dataset.test_file");
    for (const auto& [path, key] : {std::pair{dataset.train_file, "dataset.train_file"},
                                    std::pair{dataset.test_file, "dataset.test_file"}}) {
      if (!std::filesystem::is_regular_file(path)) throw ConfigError("file not found: " + path.string(), key);
    }
  } else {
    throw ConfigError("expected 'synthetic' or 'file'", "dataset.source");
  }

  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (std::count(budgets.begin(), budgets.end(), budgets[i]) > 1) {
      throw ConfigError("duplicate budget " + std::to_string(budgets[i]), "schedule.budgets");
    }
  }
  for (const auto& plan : plans()) {
    try {
      plan.validate(pool_size);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " (budget " + std::to_string(plan.budget) + ")", e.field());
    }
  }
}

std::vector<std::string> override_variables() {
  std::vector<std::string> out;
  for (const auto& p : override_paths()) out.push_back(env_name(p));
  return out;
}

void apply_env_overrides(YAML::Node& root, const EnvLookup& lookup) {
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  for (const auto& path : override_paths()) {
    const auto value = lookup(env_name(path));
    if (!value) continue;
    YAML::Node parsed;
    try {
      parsed = YAML::Load(*value);
    } catch (const YAML::Exception& e) {
      throw ConfigError("cannot parse environment value: " + std::string(e.what()), env_name(path));
    }
    const auto parts = split_path(path);
    YAML::Node cur;
    cur.reset(root);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      YAML::Node next = cur[parts[i]];
      if (!next.IsMap()) {
        cur[parts[i]] = YAML::Node(YAML::NodeType::Map);
        next.reset(cur[parts[i]]);
      }
      cur.reset(next);
    }
    cur[parts.back()] = parsed;
  }
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (v == nullptr) return std::nullopt;
    return std::string(v);
  };
}

ExperimentConfig parse_config(const YAML::Node& root) {
  ExperimentConfig c;
  Section top(root, "");

  top.read("preset", c.preset);
  if (!c.preset.empty()) {
    // Preset values are defaults; explicit keys below take precedence.
    const auto& p = find_preset(c.preset);
    c.filters = p.filters;
    c.trainer.mixmatch.lambda_u = p.lambda_u;
    c.trainer.mixmatch.alpha = p.alpha;
    c.trainer.optimizer.weight_decay = p.weight_decay;
  }

  {
    auto d = top.child("dataset");
    d.read("source", c.dataset.source);
    std::string path;
    if (d.read("train_file", path)) c.dataset.train_file = path;
    if (d.read("test_file", path)) c.dataset.test_file = path;
    d.read("normalize", c.dataset.normalize);
    auto s = d.child("synthetic");
    auto& syn = c.dataset.synthetic;
    s.read("classes", syn.spec.classes);
    s.read("samples_per_class", syn.spec.samples_per_class);
    s.read("test_per_class", syn.spec.test_per_class);
    s.read("dims", syn.spec.dims);
    s.read("seed", syn.spec.seed);
    s.read("layout", syn.layout);
    s.read("spacing", syn.spacing);
    if (s.read("means", syn.spec.means) && !s.has("layout")) syn.layout = "explicit";
    s.read("covariances", syn.spec.covariances);
    std::vector<std::uint32_t> image;
    if (s.read("image", image)) {
      if (image.size() != 3) throw ConfigError("expected [height, width, channels]", s.field("image"));
      syn.spec.image = {image[0], image[1], image[2]};
    }
    s.finish();
    d.finish();
  }
  {
    auto m = top.child("model");
    m.read("hidden", c.trainer.hidden);
    m.read("leaky_slope", c.trainer.leaky_slope);
    m.read("filters", c.filters);
    m.finish();
  }
  {
    auto o = top.child("optimizer");
    auto& opt = c.trainer.optimizer;
    o.read("learning_rate", opt.learning_rate);
    o.read("beta1", opt.beta1);
    o.read("beta2", opt.beta2);
    o.read("epsilon", opt.epsilon);
    o.read("weight_decay", opt.weight_decay);
    o.read("ema_decay", opt.ema_decay);
    o.finish();
  }
  {
    auto m = top.child("mixmatch");
    auto& mm = c.trainer.mixmatch;
    m.read("temperature", mm.temperature);
    m.read("augmentations", mm.augmentations);
    m.read("alpha", mm.alpha);
    m.read("lambda_u", mm.lambda_u);
    m.read("ramp_steps", mm.ramp_steps);
    m.read("batch_size", mm.batch_size);
    m.read("unsquared_l2", mm.unsquared_l2);
    m.finish();
  }
  {
    auto a = top.child("augmentation");
    auto& aug = c.trainer.augmentation;
    std::string kind;
    if (a.read("kind", kind)) {
      try {
        aug.kind = parse_augment_kind(kind);
      } catch (const Error& e) {
        throw ConfigError(e.what(), a.field("kind"));
      }
    }
    a.read("shift_max", aug.shift_max);
    a.read("jitter_sigma", aug.jitter_sigma);
    a.finish();
  }
  top.read("strategies", c.strategies);
  {
    auto s = top.child("strategy_options");
    s.read("n_clusters", c.n_clusters);
    s.read("beta", c.beta);
    s.read("infod_subsample", c.infod_subsample);
    s.read("aug_count", c.aug_count);
    s.finish();
  }
  {
    auto s = top.child("schedule");
    auto& p = c.schedule;
    s.read("m0", p.m0);
    s.read("query_size", p.query_size);
    s.read("budget", p.budget);
    s.read("budgets", c.budgets);
    s.read("initial_steps", p.initial_steps);
    s.read("steps_per_interval", p.steps_per_interval);
    s.read("final_steps", p.final_steps);
    s.read("checkpoint_every", p.checkpoint_every);
    s.read("eval_tail", p.eval_tail);
    s.read("balanced_initial", p.balanced_initial);
    s.finish();
  }
  {
    // `seeds: 5` means seeds 0..4.
    const auto seeds = top.raw("seeds");
    if (seeds && seeds.IsScalar()) {
      std::size_t n = 0;
      top.read("seeds", n);
      c.seeds.resize(n);
      for (std::size_t i = 0; i < n; ++i) c.seeds[i] = i;
    } else {
      top.read("seeds", c.seeds);
    }
  }
  {
    auto o = top.child("output");
    std::string dir;
    if (o.read("dir", dir)) c.output_dir = dir;
    o.read("checkpoints", c.keep_checkpoints);
    o.finish();
  }
  top.read("jobs", c.jobs);
  {
    auto k = top.child("costs");
    k.read("grid", c.costs.grid);
    k.read("targets", c.costs.targets);
    k.finish();
  }
  top.finish();
  return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(e.what(), "<yaml>");
  }
  return parse_config(root);
}

ExperimentConfig load_config(const std::filesystem::path& path, const EnvLookup& lookup) {
  if (!std::filesystem::is_regular_file(path)) throw ConfigError("file not found: " + path.string(), "--config");
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw ConfigError(e.what(), path.string());
  }
  apply_env_overrides(root, lookup);
  return parse_config(root);
}

YAML::Node to_yaml(const ExperimentConfig& c) {
  YAML::Node root(YAML::NodeType::Map);
  if (!c.preset.empty()) root["preset"] = c.preset;

  YAML::Node d(YAML::NodeType::Map);
  d["source"] = c.dataset.source;
  if (c.dataset.source == "file") {
    d["train_file"] = c.dataset.train_file.string();
    d["test_file"] = c.dataset.test_file.string();
    d["normalize"] = c.dataset.normalize;
  } else {
    const auto& syn = c.dataset.synthetic;
    YAML::Node s(YAML::NodeType::Map);
    s["classes"] = syn.spec.classes;
    s["samples_per_class"] = syn.spec.samples_per_class;
    s["test_per_class"] = syn.spec.test_per_class;
    s["dims"] = syn.spec.dims;
    s["seed"] = syn.spec.seed;
    s["layout"] = syn.layout;
    s["spacing"] = num(syn.spacing);
    if (syn.layout == "explicit") {
      YAML::Node means(YAML::NodeType::Sequence);
      for (const auto& m : syn.spec.means) means.push_back(flow_list(m));
      s["means"] = means;
    }
    if (!syn.spec.covariances.empty()) {
      YAML::Node covs(YAML::NodeType::Sequence);
      for (const auto& m : syn.spec.covariances) covs.push_back(flow_list(m));
      s["covariances"] = covs;
    }
    if (syn.spec.image.is_image()) {
      auto img = image_node(syn.spec.image);
      img.SetStyle(YAML::EmitterStyle::Flow);
      s["image"] = img;
    }
    d["synthetic"] = s;
  }
  root["dataset"] = d;

  YAML::Node m(YAML::NodeType::Map);
  m["hidden"] = flow_list(c.trainer.hidden);
  m["leaky_slope"] = num(c.trainer.leaky_slope);
  m["filters"] = c.filters;
  root["model"] = m;

  const auto& opt = c.trainer.optimizer;
  YAML::Node o(YAML::NodeType::Map);
  o["learning_rate"] = num(opt.learning_rate);
  o["beta1"] = num(opt.beta1);
  o["beta2"] = num(opt.beta2);
  o["epsilon"] = num(opt.epsilon);
  o["weight_decay"] = num(opt.weight_decay);
  o["ema_decay"] = num(opt.ema_decay);
  root["optimizer"] = o;

  const auto& mm = c.trainer.mixmatch;
  YAML::Node mx(YAML::NodeType::Map);
  mx["temperature"] = num(mm.temperature);
  mx["augmentations"] = mm.augmentations;
  mx["alpha"] = num(mm.alpha);
  mx["lambda_u"] = num(mm.lambda_u);
  mx["ramp_steps"] = mm.ramp_steps;
  mx["batch_size"] = mm.batch_size;
  mx["unsquared_l2"] = mm.unsquared_l2;
  root["mixmatch"] = mx;

  const auto& aug = c.trainer.augmentation;
  YAML::Node a(YAML::NodeType::Map);
  a["kind"] = to_string(aug.kind);
  a["shift_max"] = aug.shift_max;
  a["jitter_sigma"] = num(aug.jitter_sigma);
  root["augmentation"] = a;

  root["strategies"] = flow_list(c.strategies);
  YAML::Node so(YAML::NodeType::Map);
  so["n_clusters"] = c.n_clusters;
  so["beta"] = num(c.beta);
  so["infod_subsample"] = c.infod_subsample;
  so["aug_count"] = c.aug_count;
  root["strategy_options"] = so;

  const auto& p = c.schedule;
  YAML::Node s(YAML::NodeType::Map);
  s["m0"] = p.m0;
  s["query_size"] = p.query_size;
  s["budget"] = p.budget;
  if (!c.budgets.empty()) s["budgets"] = flow_list(c.budgets);
  s["initial_steps"] = p.initial_steps;
  s["steps_per_interval"] = p.steps_per_interval;
  s["final_steps"] = p.final_steps;
  s["checkpoint_every"] = p.checkpoint_every;
  s["eval_tail"] = p.eval_tail;
  s["balanced_initial"] = p.balanced_initial;
  root["schedule"] = s;

  root["seeds"] = flow_list(c.seeds);
  YAML::Node out(YAML::NodeType::Map);
  out["dir"] = c.output_dir.string();
  out["checkpoints"] = c.keep_checkpoints;
  root["output"] = out;
  root["jobs"] = c.jobs;

  YAML::Node k(YAML::NodeType::Map);
  k["grid"] = c.costs.grid;
  k["targets"] = flow_list(c.costs.targets);
  root["costs"] = k;
  return root;
}

std::string dump_config(const ExperimentConfig& config) {
  YAML::Emitter e;
  e << to_yaml(config);
  return std::string(e.c_str()) + "\n";
}

SyntheticSpec resolve_synthetic(const SyntheticConfig& config) {
  auto spec = config.spec;
  const auto k = spec.classes;
  if (config.layout == "explicit") return spec;
  if (!spec.means.empty()) throw ConfigError("means are only allowed with layout 'explicit'", "dataset.synthetic.means");
  if (!(config.spacing > 0.0)) throw ConfigError("must be > 0", "dataset.synthetic.spacing");
  if (spec.dims < 1) throw ConfigError("must be >= 1", "dataset.synthetic.dims");
  spec.means.assign(k, std::vector<double>(spec.dims, 0.0));
  if (config.layout == "line") {
    // Evenly spaced along the first axis, `2 * spacing` apart, centred on 0.
    for (std::size_t c = 0; c < k; ++c) {
      spec.means[c][0] = (2.0 * static_cast<double>(c) - static_cast<double>(k - 1)) * config.spacing;
    }
  } else if (config.layout == "circle") {
    if (spec.dims < 2) throw ConfigError("circle layout needs dims >= 2", "dataset.synthetic.dims");
    for (std::size_t c = 0; c < k; ++c) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(k);
      spec.means[c][0] = config.spacing * std::cos(angle);
      spec.means[c][1] = config.spacing * std::sin(angle);
    }
  } else {
    throw ConfigError("expected 'line', 'circle' or 'explicit'", "dataset.synthetic.layout");
  }
  return spec;
}

SyntheticData load_dataset(const DatasetConfig& config) {
  if (config.source == "synthetic") return make_synthetic_split(resolve_synthetic(config.synthetic));
  const auto load = [&](const std::filesystem::path& path) {
    if (path.extension() == ".csv") return Dataset::import_csv(path, config.normalize);
    return Dataset::load(path);
  };
  return {load(config.train_file), load(config.test_file)};
}

std::uint64_t checksum(const std::vector<std::uint8_t>& bytes) {
  return derive_seed(0, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace mma::cli
