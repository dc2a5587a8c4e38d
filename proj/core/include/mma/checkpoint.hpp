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
#include <string>
#include <utility>
#include <vector>

namespace mma {

// MMACKPT1 container. Every field round-trips bit-exactly; `progress` is an
// opaque payload the training harness uses to resume its bookkeeping.
struct Checkpoint {
  std::uint64_t step_count = 0;
  std::vector<double> params;
  std::vector<double> ema_params;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::vector<std::pair<std::string, std::string>> rng_states;  // (stream name, engine state)
  std::vector<std::uint64_t> labeled_ids;
  std::string progress;

  std::vector<std::uint8_t> to_bytes() const;
  static Checkpoint from_bytes(std::vector<std::uint8_t> bytes);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  const std::string& rng_state(const std::string& name) const;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

}  // namespace mma
