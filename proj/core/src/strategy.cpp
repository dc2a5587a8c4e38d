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

#include <string>

#include "mma/active.hpp"
#include "mma/error.hpp"

namespace mma {

StrategySpec StrategySpec::parse(std::string_view name) {
  StrategySpec spec;
  if (name == "random") {
    spec.selector = Selector::kRandom;
    return spec;
  }
  const auto bad = [&](const std::string& why) {
    return ConfigError("strategy '" + std::string(name) + "': " + why, "strategies");
  };
  const auto dash = name.find('-');
  if (dash == std::string_view::npos) throw bad("expected uncertainty[.aug]-selector");
  auto measure = name.substr(0, dash);
  const auto selector = name.substr(dash + 1);

  if (measure.ends_with(".aug")) {
    spec.use_aug = true;
    measure.remove_suffix(4);
  }
  if (measure == "max") {
    spec.uncertainty = Uncertainty::kMax;
  } else if (measure == "diff2") {
    spec.uncertainty = Uncertainty::kDiff2;
  } else {
    throw bad("unknown uncertainty measure '" + std::string(measure) + "'");
  }

  if (selector == "direct") {
    spec.selector = Selector::kDirect;
  } else if (selector == "kmeans") {
    spec.selector = Selector::kKMeans;
  } else if (selector == "infoD") {
    spec.selector = Selector::kInfoD;
  } else {
    throw bad("unknown selector '" + std::string(selector) + "'");
  }
  return spec;
}

std::string StrategySpec::name() const {
  if (selector == Selector::kRandom) return "random";
  std::string out = uncertainty == Uncertainty::kMax ? "max" : "diff2";
  if (use_aug) out += ".aug";
  switch (selector) {
    case Selector::kDirect: return out + "-direct";
    case Selector::kKMeans: return out + "-kmeans";
    case Selector::kInfoD: return out + "-infoD";
    case Selector::kRandom: break;
  }
  return out;
}

void StrategySpec::validate() const {
  if (n_clusters < 1) throw ConfigError("must be >= 1", "strategy_options.n_clusters");
  if (!(beta >= 0.0)) throw ConfigError("must be >= 0", "strategy_options.beta");
  if (use_aug && aug_count < 1) throw ConfigError("must be >= 1", "strategy_options.aug_count");
}

}  // namespace mma
