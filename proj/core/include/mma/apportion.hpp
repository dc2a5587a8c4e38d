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
#include <span>
#include <vector>

namespace mma {

// Largest-remainder (Hamilton) apportionment of `total` seats by integer
// weights. Remainders are compared exactly; ties go to the lower index.
// The result always sums to `total` when at least one weight is non-zero.
std::vector<std::size_t> largest_remainder(std::span<const std::size_t> weights, std::size_t total);

// Apportionment with per-slot capacities: slots that would exceed their
// capacity are capped and the overflow is re-apportioned over the slots that
// still have room, by the same rule and weights. Requires total <= sum(capacity).
std::vector<std::size_t> capped_largest_remainder(std::span<const std::size_t> weights,
                                                  std::span<const std::size_t> capacity,
                                                  std::size_t total);

}  // namespace mma
