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
#include <string>
#include <string_view>
#include <vector>

#include "mma/data.hpp"
#include "mma/model.hpp"
#include "mma/prob.hpp"
#include "mma/rng.hpp"

namespace mma {

enum class Uncertainty { kMax, kDiff2 };
enum class Selector { kDirect, kKMeans, kInfoD, kRandom };

// One query strategy, named `uncertainty[.aug]-selector` (e.g.
// `diff2.aug-kmeans`, `max-direct`) or plain `random`.
struct StrategySpec {
  Uncertainty uncertainty = Uncertainty::kDiff2;
  bool use_aug = false;
  Selector selector = Selector::kDirect;
  std::size_t n_clusters = 20;
  double beta = 1.0;
  std::size_t infod_subsample = 0;  // 0 = use every candidate
  std::size_t aug_count = 2;

  static StrategySpec parse(std::string_view name);
  std::string name() const;
  void validate() const;

  friend bool operator==(const StrategySpec&, const StrategySpec&) = default;
};

struct ScoredCandidate {
  std::size_t id = 0;
  double score = 0.0;
  std::vector<double> embedding;
};

// 1 - max_c p_c
double score_max(const ProbVector& p);
// 1 - (p_c1 - p_c2) over the two largest entries; requires |C| >= 2.
double score_diff2(const ProbVector& p);
double uncertainty_score(Uncertainty kind, const ProbVector& p);

// One candidate per unlabeled id, in ascending id order. With use_aug the
// scored distribution is the unsharpened mean of `aug_count` augmented
// predictions (augmentations drawn from `draws` in id order); embeddings are
// always taken on the un-augmented example.
std::vector<ScoredCandidate> score_pool(const Predictor& model, const Pool& pool, const StrategySpec& spec,
                                        const AugmentationPolicy& augmentation, Rng& draws);

// Every selector returns `b` distinct ids sorted ascending, and does not
// depend on the order of `candidates`. Ties in score go to the lower id.
std::vector<std::size_t> select_direct(std::span<const ScoredCandidate> candidates, std::size_t b);

struct KMeansSelection {
  std::vector<std::size_t> ids;
  std::vector<std::size_t> cluster_sizes;
  std::vector<std::size_t> quotas;
};

// Per-cluster quotas: largest remainder of b by cluster size, capped at the
// cluster size with overflow re-apportioned over the remaining clusters.
std::vector<std::size_t> cluster_quotas(std::span<const std::size_t> cluster_sizes, std::size_t b);

KMeansSelection select_kmeans(std::span<const ScoredCandidate> candidates, std::size_t b, std::size_t n_clusters,
                              std::uint64_t seed);

// Information density weighting s'(x) = s(x) * max(0, mean cosine)^beta,
// with density taken over all candidates or a seeded uniform subsample.
std::vector<double> information_density(std::span<const ScoredCandidate> candidates, std::size_t subsample,
                                        std::uint64_t seed);
std::vector<std::size_t> select_infod(std::span<const ScoredCandidate> candidates, std::size_t b, double beta,
                                      std::size_t subsample = 0, std::uint64_t seed = 0);

std::vector<std::size_t> select_random(std::span<const ScoredCandidate> candidates, std::size_t b,
                                       std::uint64_t seed);

// Dispatches on spec.selector.
std::vector<std::size_t> select_batch(std::span<const ScoredCandidate> candidates, const StrategySpec& spec,
                                      std::size_t b, std::uint64_t seed);

}  // namespace mma
