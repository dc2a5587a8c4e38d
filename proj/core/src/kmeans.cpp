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

#include "mma/kmeans.hpp"

#include <cmath>
#include <limits>

#include "mma/error.hpp"

namespace mma {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

namespace {

std::vector<std::vector<double>> seed_plus_plus(const std::vector<std::vector<double>>& points, std::size_t k,
                                                Rng& rng) {
  const std::size_t n = points.size();
  std::vector<std::vector<double>> centers;
  centers.push_back(points[rng.below(n)]);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points[i], centers.back()));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.below(n));  // every point coincides with a center
    }
    centers.push_back(points[pick]);
  }
  return centers;
}

}  // namespace

KMeansResult kmeans(const std::vector<std::vector<double>>& points, std::size_t k, Rng& rng,
                    const KMeansOptions& options) {
  if (points.empty()) throw PreconditionError("k-means on an empty point set");
  if (k == 0) throw PreconditionError("k-means needs at least one cluster");
  const std::size_t dims = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dims) throw PreconditionError("k-means points differ in dimension");
  }
  const std::size_t n = points.size();
  k = std::min(k, n);

  KMeansResult r;
  r.centers = seed_plus_plus(points, k, rng);
  r.assignment.assign(n, 0);
  std::vector<double> dist(n, 0.0);
  double previous = std::numeric_limits<double>::infinity();

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    r.iterations = iter + 1;
    bool changed = iter == 0;
    r.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = squared_distance(points[i], r.centers[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = squared_distance(points[i], r.centers[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      changed = changed || r.assignment[i] != best;
      r.assignment[i] = best;
      dist[i] = best_d;
      r.inertia += best_d;
    }

    r.sizes.assign(k, 0);
    for (const auto a : r.assignment) ++r.sizes[a];
    for (std::size_t c = 0; c < k; ++c) {
      if (r.sizes[c] > 0) continue;
      // Move the farthest point (lowest index on ties) from a cluster that
      // can spare it into the empty one.
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (r.sizes[r.assignment[i]] < 2) continue;
        if (far == n || dist[i] > dist[far]) far = i;
      }
      if (far == n) break;
      --r.sizes[r.assignment[far]];
      r.assignment[far] = c;
      ++r.sizes[c];
      r.inertia -= dist[far];
      dist[far] = 0.0;
      r.centers[c] = points[far];
      changed = true;
    }

    for (std::size_t c = 0; c < k; ++c) {
      if (r.sizes[c] == 0) continue;
      std::vector<double> mean(dims, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (r.assignment[i] != c) continue;
        for (std::size_t d = 0; d < dims; ++d) mean[d] += points[i][d];
      }
      for (auto& v : mean) v /= static_cast<double>(r.sizes[c]);
      r.centers[c] = std::move(mean);
    }

    if (!changed) break;
    if (std::isfinite(previous) && std::abs(previous - r.inertia) <= options.relative_tolerance * previous) break;
    previous = r.inertia;
  }
  return r;
}

}  // namespace mma
