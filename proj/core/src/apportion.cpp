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

#include "mma/apportion.hpp"

#include <algorithm>
#include <numeric>

#include "mma/error.hpp"

namespace mma {

namespace {
__extension__ using Wide = unsigned __int128;
}  // namespace

std::vector<std::size_t> largest_remainder(std::span<const std::size_t> weights, std::size_t total) {
  std::vector<std::size_t> seats(weights.size(), 0);
  const auto sum = std::accumulate(weights.begin(), weights.end(), std::uint64_t{0});
  if (total == 0) return seats;
  if (sum == 0) throw PreconditionError("cannot apportion over all-zero weights");

  std::vector<std::uint64_t> remainder(weights.size(), 0);
  std::size_t given = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const auto scaled = static_cast<Wide>(total) * weights[i];
    seats[i] = static_cast<std::size_t>(scaled / sum);
    remainder[i] = static_cast<std::uint64_t>(scaled % sum);
    given += seats[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; given < total; ++k, ++given) ++seats[order[k]];
  return seats;
}

std::vector<std::size_t> capped_largest_remainder(std::span<const std::size_t> weights,
                                                  std::span<const std::size_t> capacity,
                                                  std::size_t total) {
  if (weights.size() != capacity.size()) throw PreconditionError("weights and capacities differ in length");
  if (std::accumulate(capacity.begin(), capacity.end(), std::size_t{0}) < total) {
    throw PreconditionError("total exceeds combined capacity");
  }
  std::vector<std::size_t> seats(weights.size(), 0);
  std::vector<bool> open(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) open[i] = capacity[i] > 0;

  std::size_t left = total;
  while (left > 0) {
    std::vector<std::size_t> open_weights(weights.size(), 0);
    bool any_weight = false;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (open[i]) {
        open_weights[i] = weights[i];
        any_weight = any_weight || weights[i] > 0;
      }
    }
    // Open slots with zero weight still have room; fall back to equal weights.
    if (!any_weight) {
      for (std::size_t i = 0; i < weights.size(); ++i) open_weights[i] = open[i] ? 1 : 0;
    }
    const auto share = largest_remainder(open_weights, left);
    std::size_t placed = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      const auto room = capacity[i] - seats[i];
      const auto take = std::min(share[i], room);
      seats[i] += take;
      placed += take;
      if (seats[i] == capacity[i]) open[i] = false;
    }
    left -= placed;
  }
  return seats;
}

}  // namespace mma
