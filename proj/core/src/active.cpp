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

#include "mma/active.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "mma/apportion.hpp"
#include "mma/error.hpp"
#include "mma/kmeans.hpp"

namespace mma {

double score_max(const ProbVector& p) {
  if (p.size() == 0) throw PreconditionError("score_max of empty distribution");
  return 1.0 - *std::max_element(p.begin(), p.end());
}

double score_diff2(const ProbVector& p) {
  if (p.size() < 2) throw PreconditionError("diff2 needs at least two classes");
  double first = -1.0;
  double second = -1.0;
  for (const double x : p) {
    if (x > first) {
      second = first;
      first = x;
    } else if (x > second) {
      second = x;
    }
  }
  return 1.0 - (first - second);
}

double uncertainty_score(Uncertainty kind, const ProbVector& p) {
  return kind == Uncertainty::kMax ? score_max(p) : score_diff2(p);
}

std::vector<ScoredCandidate> score_pool(const Predictor& model, const Pool& pool, const StrategySpec& spec,
                                        const AugmentationPolicy& augmentation, Rng& draws) {
  const auto& ds = pool.dataset();
  if (model.input_dim() != ds.dims()) throw PreconditionError("model input does not match dataset features");
  std::vector<ScoredCandidate> out;
  out.reserve(pool.unlabeled().size());
  for (const auto id : pool.unlabeled()) {
    const auto x = ds.features(id);
    ProbVector p;
    if (spec.use_aug) {
      std::vector<ProbVector> preds;
      for (std::size_t k = 0; k < spec.aug_count; ++k) {
        preds.push_back(model.predict(augment(x, ds.image_shape(), augmentation, draws)));
      }
      p = mean_of(preds);
    } else {
      p = model.predict(x);
    }
    out.push_back({id, uncertainty_score(spec.uncertainty, p), model.embed(x)});
  }
  return out;
}

namespace {

// Candidate indices sorted by id; rejects duplicate ids.
std::vector<std::size_t> canonical_order(std::span<const ScoredCandidate> c) {
  std::vector<std::size_t> order(c.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c[a].id < c[b].id; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (c[order[i]].id == c[order[i - 1]].id) throw PreconditionError("duplicate candidate id");
  }
  return order;
}

void check_batch(std::span<const ScoredCandidate> candidates, std::size_t b) {
  if (b > candidates.size()) {
    throw PreconditionError("query batch of " + std::to_string(b) + " exceeds " +
                            std::to_string(candidates.size()) + " candidates");
  }
}

// Top-b of `members` (candidate indices) by value descending, id ascending.
std::vector<std::size_t> top_by(std::span<const ScoredCandidate> c, std::vector<std::size_t> members,
                                std::span<const double> value, std::size_t b) {
  std::sort(members.begin(), members.end(), [&](std::size_t x, std::size_t y) {
    if (value[x] != value[y]) return value[x] > value[y];
    return c[x].id < c[y].id;
  });
  members.resize(b);
  std::vector<std::size_t> ids;
  ids.reserve(b);
  for (const auto m : members) ids.push_back(c[m].id);
  return ids;
}

std::vector<double> scores_of(std::span<const ScoredCandidate> c) {
  std::vector<double> s(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) s[i] = c[i].score;
  return s;
}

std::vector<double> unit(const std::vector<double>& v) {
  double n = 0.0;
  for (const double x : v) n += x * x;
  n = std::sqrt(n);
  std::vector<double> out(v.size(), 0.0);
  if (n > 0.0) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  }
  return out;
}

std::vector<std::size_t> sorted(std::vector<std::size_t> ids) {
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

std::vector<std::size_t> select_direct(std::span<const ScoredCandidate> candidates, std::size_t b) {
  check_batch(candidates, b);
  const auto order = canonical_order(candidates);
  const auto s = scores_of(candidates);
  return sorted(top_by(candidates, order, s, b));
}

std::vector<std::size_t> cluster_quotas(std::span<const std::size_t> cluster_sizes, std::size_t b) {
  return capped_largest_remainder(cluster_sizes, cluster_sizes, b);
}

KMeansSelection select_kmeans(std::span<const ScoredCandidate> candidates, std::size_t b, std::size_t n_clusters,
                              std::uint64_t seed) {
  check_batch(candidates, b);
  if (n_clusters < 1) throw PreconditionError("k-means selection needs at least one cluster");
  KMeansSelection out;
  if (b == 0) return out;

  const auto order = canonical_order(candidates);
  std::vector<std::vector<double>> points;
  points.reserve(order.size());
  for (const auto i : order) points.push_back(unit(candidates[i].embedding));

  Rng rng = Rng::stream(seed, "kmeans");
  const auto clustering = kmeans(points, n_clusters, rng);
  out.cluster_sizes = clustering.sizes;
  out.quotas = cluster_quotas(out.cluster_sizes, b);

  std::vector<std::vector<std::size_t>> members(out.cluster_sizes.size());
  for (std::size_t k = 0; k < order.size(); ++k) members[clustering.assignment[k]].push_back(order[k]);
  const auto s = scores_of(candidates);
  for (std::size_t c = 0; c < members.size(); ++c) {
    const auto chosen = top_by(candidates, members[c], s, out.quotas[c]);
    out.ids.insert(out.ids.end(), chosen.begin(), chosen.end());
  }
  out.ids = sorted(std::move(out.ids));
  return out;
}

std::vector<double> information_density(std::span<const ScoredCandidate> candidates, std::size_t subsample,
                                        std::uint64_t seed) {
  const auto order = canonical_order(candidates);
  std::vector<std::size_t> reference = order;
  if (subsample > 0 && subsample < order.size()) {
    Rng rng = Rng::stream(seed, "infoD-subsample");
    std::vector<std::size_t> picked;
    for (const auto k : rng.sample_without_replacement(order.size(), subsample)) picked.push_back(order[k]);
    reference = std::move(picked);
  }
  std::vector<std::vector<double>> units(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) units[i] = unit(candidates[i].embedding);

  // mean_j cos(x_i, x_j) = <u_i, mean_j u_j> for unit vectors u.
  const std::size_t dims = candidates.empty() ? 0 : units.front().size();
  std::vector<double> centroid(dims, 0.0);
  for (const auto j : reference) {
    if (units[j].size() != dims) throw PreconditionError("candidate embeddings differ in dimension");
    for (std::size_t d = 0; d < dims; ++d) centroid[d] += units[j][d];
  }
  if (!reference.empty()) {
    for (auto& v : centroid) v /= static_cast<double>(reference.size());
  }
  std::vector<double> density(candidates.size(), 0.0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double dot = 0.0;
    for (std::size_t d = 0; d < dims; ++d) dot += units[i][d] * centroid[d];
    density[i] = dot;
  }
  return density;
}

std::vector<std::size_t> select_infod(std::span<const ScoredCandidate> candidates, std::size_t b, double beta,
                                      std::size_t subsample, std::uint64_t seed) {
  check_batch(candidates, b);
  if (!(beta >= 0.0)) throw PreconditionError("infoD beta must be >= 0");
  const auto density = information_density(candidates, subsample, seed);
  std::vector<double> weighted(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    weighted[i] = candidates[i].score * std::pow(std::max(0.0, density[i]), beta);
  }
  return sorted(top_by(candidates, canonical_order(candidates), weighted, b));
}

std::vector<std::size_t> select_random(std::span<const ScoredCandidate> candidates, std::size_t b,
                                       std::uint64_t seed) {
  check_batch(candidates, b);
  const auto order = canonical_order(candidates);
  Rng rng = Rng::stream(seed, "random-select");
  std::vector<std::size_t> ids;
  for (const auto k : rng.sample_without_replacement(order.size(), b)) ids.push_back(candidates[order[k]].id);
  return sorted(std::move(ids));
}

std::vector<std::size_t> select_batch(std::span<const ScoredCandidate> candidates, const StrategySpec& spec,
                                      std::size_t b, std::uint64_t seed) {
  switch (spec.selector) {
    case Selector::kDirect: return select_direct(candidates, b);
    case Selector::kKMeans: return select_kmeans(candidates, b, spec.n_clusters, seed).ids;
    case Selector::kInfoD: return select_infod(candidates, b, spec.beta, spec.infod_subsample, seed);
    case Selector::kRandom: return select_random(candidates, b, seed);
  }
  throw PreconditionError("unknown selector");
}

}  // namespace mma
