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

#include <cstddef>
#include <vector>

#include "mma/rng.hpp"

namespace mma {

struct KMeansOptions {
  std::size_t max_iterations = 100;
  double relative_tolerance = 1e-6;
};

struct KMeansResult {
  std::vector<std::vector<double>> centers;
  std::vector<std::size_t> assignment;  // per point
  std::vector<std::size_t> sizes;       // per cluster
  double inertia = 0.0;
  std::size_t iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding. Assignment ties go to the lower
// center index; an empty cluster is re-seeded with the point farthest from
// its current center. Stops after max_iterations, when assignments stop
// changing, or when inertia changes by less than the relative tolerance.
// k is clamped to the number of points.
KMeansResult kmeans(const std::vector<std::vector<double>>& points, std::size_t k, Rng& rng,
                    const KMeansOptions& options = {});

double squared_distance(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace mma
