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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "mma/active.hpp"
#include "mma/error.hpp"
#include "mma/kmeans.hpp"
#include "support/oracles.hpp"

namespace mma {
namespace {

// Returns a fixed distribution chosen by the first feature (used as a key).
class TablePredictor : public Predictor {
 public:
  explicit TablePredictor(std::vector<ProbVector> table) : table_(std::move(table)) {}
  std::size_t input_dim() const override { return 2; }
  std::size_t num_classes() const override { return table_.front().size(); }
  ProbVector predict(std::span<const double> x) const override {
    const auto key = static_cast<std::size_t>(std::lround(x[0]));
    return table_.at(std::min(key, table_.size() - 1));
  }
  std::vector<double> embed(std::span<const double> x) const override { return {x[0], x[1], 1.0}; }

 private:
  std::vector<ProbVector> table_;
};

std::vector<ScoredCandidate> random_candidates(std::size_t n, Rng& rng, std::size_t dims = 4, bool coarse = false) {
  std::vector<ScoredCandidate> c;
  std::vector<std::size_t> ids(n * 3);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  rng.shuffle(ids);
  for (std::size_t i = 0; i < n; ++i) {
    ScoredCandidate s;
    s.id = ids[i];
    s.score = coarse ? static_cast<double>(rng.below(5)) / 4.0 : rng.uniform();
    for (std::size_t d = 0; d < dims; ++d) s.embedding.push_back(rng.normal());
    c.push_back(std::move(s));
  }
  return c;
}

std::vector<std::pair<std::size_t, double>> id_scores(const std::vector<ScoredCandidate>& c) {
  std::vector<std::pair<std::size_t, double>> out;
  for (const auto& s : c) out.emplace_back(s.id, s.score);
  return out;
}

TEST(Scores, MaxExamples) {
  EXPECT_EQ(score_max(ProbVector::one_hot(3, 0)), 0.0);
  EXPECT_NEAR(score_max(ProbVector::uniform(3)), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(score_max(ProbVector{0.5, 0.3, 0.2}), 0.5, 1e-15);
}

TEST(Scores, Diff2Examples) {
  EXPECT_EQ(score_diff2(ProbVector::one_hot(3, 2)), 0.0);
  EXPECT_EQ(score_diff2(ProbVector::uniform(4)), 1.0);
  EXPECT_NEAR(score_diff2(ProbVector{0.5, 0.3, 0.2}), 0.8, 1e-15);
  EXPECT_EQ(score_diff2(ProbVector{0.1, 0.45, 0.45}), 1.0);
  EXPECT_THROW(score_diff2(ProbVector{1.0}), PreconditionError);
}

TEST(Scores, RandomizedBoundsAndOrdering) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(9);
    std::vector<double> p(n);
    double s = 0.0;
    for (auto& v : p) s += (v = rng.uniform());
    for (auto& v : p) v /= s;
    const ProbVector pv(p);
    const double m = score_max(pv);
    const double d = score_diff2(pv);
    EXPECT_GE(m, 0.0);
    EXPECT_LE(m, 1.0 - 1.0 / static_cast<double>(n) + 1e-12);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    EXPECT_GE(d, m - 1e-15);
  }
}

TEST(StrategySpec, GrammarRoundTrip) {
  for (const std::string name : {"random", "max-direct", "diff2-direct", "max.aug-kmeans", "diff2.aug-kmeans",
                                 "diff2.aug-infoD", "max-infoD", "diff2.aug-direct"}) {
    EXPECT_EQ(StrategySpec::parse(name).name(), name);
  }
  const auto s = StrategySpec::parse("diff2.aug-kmeans");
  EXPECT_EQ(s.uncertainty, Uncertainty::kDiff2);
  EXPECT_TRUE(s.use_aug);
  EXPECT_EQ(s.selector, Selector::kKMeans);
  EXPECT_EQ(s.n_clusters, 20u);
  EXPECT_EQ(s.beta, 1.0);
  for (const std::string bad : {"", "diff3-direct", "diff2-greedy", "diff2.aug", "max.noaug-direct"}) {
    EXPECT_THROW(StrategySpec::parse(bad), ConfigError) << bad;
  }
}

TEST(ScorePool, StubbedFiveIds) {
  const std::vector<ProbVector> table{{0.9, 0.1}, {0.6, 0.4}, {0.5, 0.5}, {0.2, 0.8}, {0.7, 0.3}};
  Dataset ds(2, 2);
  for (std::size_t i = 0; i < 5; ++i) ds.add(std::vector<double>{static_cast<double>(i), 0.0}, 0);
  const Pool pool(ds);
  const TablePredictor model(table);
  Rng draws(0);
  const auto diff2 = score_pool(model, pool, StrategySpec::parse("diff2-direct"), {}, draws);
  const auto max = score_pool(model, pool, StrategySpec::parse("max-direct"), {}, draws);
  const std::vector<double> expect_diff2{0.2, 0.8, 1.0, 0.4, 0.6};
  const std::vector<double> expect_max{0.1, 0.4, 0.5, 0.2, 0.3};
  ASSERT_EQ(diff2.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(diff2[i].id, i);
    EXPECT_NEAR(diff2[i].score, expect_diff2[i], 1e-12);
    EXPECT_NEAR(max[i].score, expect_max[i], 1e-12);
    EXPECT_EQ(diff2[i].embedding, (std::vector<double>{static_cast<double>(i), 0.0, 1.0}));
  }
}

TEST(ScorePool, IdentityAugmentationMatchesPlain) {
  const auto ds = make_synthetic(SyntheticSpec{3, 20, 2, {{0, 0}, {2, 0}, {0, 2}}, {}, 5});
  const Pool pool = initial_sample(Pool(ds), 10, false, 1);
  const Classifier m(ModelShape{2, {8, 6}, 3, 0.1}, 2);
  const ClassifierSnapshot snap(m, true);
  Rng a(1);
  Rng b(1);
  const auto plain = score_pool(snap, pool, StrategySpec::parse("diff2-direct"), {}, a);
  const auto aug = score_pool(snap, pool, StrategySpec::parse("diff2.aug-direct"), {}, b);
  ASSERT_EQ(plain.size(), pool.unlabeled().size());
  for (std::size_t i = 0; i < plain.size(); ++i) {
    EXPECT_NEAR(plain[i].score, aug[i].score, 1e-15);
    EXPECT_EQ(plain[i].embedding, aug[i].embedding);
  }
  EXPECT_EQ(score_pool(snap, initial_sample(Pool(ds), ds.size(), false, 0), StrategySpec{}, {}, a).size(), 0u);
}

TEST(SelectDirect, Examples) {
  const std::vector<ScoredCandidate> c{{1, 0.9, {}}, {2, 0.1, {}}, {3, 0.5, {}}};
  EXPECT_EQ(select_direct(c, 2), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(select_direct(c, 3), (std::vector<std::size_t>{1, 2, 3}));
  const std::vector<ScoredCandidate> ties{{7, 0.5, {}}, {4, 0.5, {}}, {9, 0.5, {}}};
  EXPECT_EQ(select_direct(ties, 2), (std::vector<std::size_t>{4, 7}));
  EXPECT_THROW(select_direct(c, 4), PreconditionError);
  const std::vector<ScoredCandidate> dup{{1, 0.5, {}}, {1, 0.4, {}}};
  EXPECT_THROW(select_direct(dup, 1), PreconditionError);
}

TEST(SelectDirect, MatchesFullSortOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = random_candidates(1 + rng.below(300), rng, 1, trial % 2 == 0);
    const auto b = rng.below(c.size() + 1);
    EXPECT_EQ(select_direct(c, b), oracle::top_b(id_scores(c), b));
  }
}

TEST(Selectors, OrderInvariantAndDistinct) {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    auto c = random_candidates(20 + rng.below(60), rng, 3, true);
    const auto b = 1 + rng.below(10);
    StrategySpec spec;
    for (const auto sel : {Selector::kDirect, Selector::kKMeans, Selector::kInfoD, Selector::kRandom}) {
      spec.selector = sel;
      spec.n_clusters = 4;
      const auto first = select_batch(c, spec, b, 99);
      auto shuffled = c;
      rng.shuffle(shuffled);
      EXPECT_EQ(select_batch(shuffled, spec, b, 99), first);
      EXPECT_EQ(first.size(), b);
      EXPECT_EQ(std::set<std::size_t>(first.begin(), first.end()).size(), b);
      EXPECT_TRUE(std::is_sorted(first.begin(), first.end()));
    }
  }
}

TEST(KMeans, QuotaExamples) {
  const std::vector<std::size_t> a{60, 30, 10};
  EXPECT_EQ(cluster_quotas(a, 10), (std::vector<std::size_t>{6, 3, 1}));
  const std::vector<std::size_t> b{50, 50};
  EXPECT_EQ(cluster_quotas(b, 5), (std::vector<std::size_t>{3, 2}));
  const std::vector<std::size_t> small{1, 1, 98};
  EXPECT_EQ(cluster_quotas(small, 99), (std::vector<std::size_t>{1, 1, 97}));
}

TEST(KMeans, QuotasSumAndRespectSizes) {
  Rng rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::size_t> sizes(1 + rng.below(20));
    std::size_t total = 0;
    for (auto& s : sizes) total += (s = rng.below(30));
    if (total == 0) continue;
    const auto b = rng.below(total + 1);
    const auto q = cluster_quotas(sizes, b);
    std::size_t sum = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      EXPECT_LE(q[i], sizes[i]);
      sum += q[i];
    }
    EXPECT_EQ(sum, b);
  }
}

TEST(KMeans, SingleClusterEqualsDirect) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = random_candidates(10 + rng.below(50), rng);
    const auto b = 1 + rng.below(c.size());
    EXPECT_EQ(select_kmeans(c, b, 1, 3).ids, select_direct(c, b));
  }
}

TEST(KMeans, SeparatesObviousClusters) {
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 10; ++i) pts.push_back({0.0 + 0.01 * i, 0.0});
  for (int i = 0; i < 10; ++i) pts.push_back({10.0, 10.0 + 0.01 * i});
  Rng rng(6);
  const auto r = kmeans(pts, 2, rng);
  EXPECT_EQ(r.sizes[0] + r.sizes[1], 20u);
  EXPECT_EQ(r.sizes[0], 10u);
  for (int i = 1; i < 10; ++i) EXPECT_EQ(r.assignment[i], r.assignment[0]);
  for (int i = 11; i < 20; ++i) EXPECT_EQ(r.assignment[i], r.assignment[10]);
  EXPECT_NE(r.assignment[0], r.assignment[10]);
  Rng again(6);
  EXPECT_EQ(kmeans(pts, 2, again).assignment, r.assignment);
  Rng more(6);
  EXPECT_EQ(kmeans(pts, 50, more).centers.size(), 20u);
}

TEST(KMeans, SelectionHonorsQuotasPerCluster) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = random_candidates(30 + rng.below(100), rng, 3);
    const auto b = 1 + rng.below(15);
    const auto sel = select_kmeans(c, b, 5, trial);
    EXPECT_EQ(sel.ids.size(), b);
    std::size_t q = 0;
    for (std::size_t k = 0; k < sel.quotas.size(); ++k) {
      EXPECT_LE(sel.quotas[k], sel.cluster_sizes[k]);
      q += sel.quotas[k];
    }
    EXPECT_EQ(q, b);
  }
}

TEST(InfoD, DensityFormulaExample) {
  // Two clustered ids and two opposite outliers, equal scores.
  const std::vector<ScoredCandidate> c{{0, 0.8, {1.0, 0.0}}, {1, 0.8, {2.0, 0.0}}, {2, 0.8, {0.0, 1.0}}, {3, 0.8, {0.0, -3.0}}};
  const auto d = information_density(c, 0, 0);
  EXPECT_NEAR(d[0], 0.5, 1e-15);
  EXPECT_NEAR(d[1], 0.5, 1e-15);
  EXPECT_NEAR(d[2], 0.0, 1e-15);
  EXPECT_NEAR(d[3], 0.0, 1e-15);
  EXPECT_NEAR(c[0].score * std::pow(d[0], 1.0), 0.4, 1e-15);
  EXPECT_EQ(select_infod(c, 2, 1.0), (std::vector<std::size_t>{0, 1}));
}

TEST(InfoD, DensityMatchesPairwiseCosines) {
  Rng rng(8);
  const auto c = random_candidates(25, rng, 5);
  const auto d = information_density(c, 0, 0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      double dot = 0.0;
      double ni = 0.0;
      double nj = 0.0;
      for (std::size_t k = 0; k < 5; ++k) {
        dot += c[i].embedding[k] * c[j].embedding[k];
        ni += c[i].embedding[k] * c[i].embedding[k];
        nj += c[j].embedding[k] * c[j].embedding[k];
      }
      s += dot / std::sqrt(ni * nj);
    }
    EXPECT_NEAR(d[i], s / static_cast<double>(c.size()), 1e-12);
  }
}

TEST(InfoD, BetaZeroRanksLikeDirect) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = random_candidates(5 + rng.below(40), rng, 3, true);
    for (std::size_t b = 0; b <= c.size(); ++b) EXPECT_EQ(select_infod(c, b, 0.0), select_direct(c, b));
  }
}

TEST(InfoD, SubsampleIsSeeded) {
  Rng rng(10);
  const auto c = random_candidates(50, rng, 3);
  EXPECT_EQ(information_density(c, 10, 4), information_density(c, 10, 4));
  EXPECT_NE(information_density(c, 10, 4), information_density(c, 10, 5));
  EXPECT_EQ(information_density(c, 50, 4), information_density(c, 0, 0));
}

TEST(SelectRandom, ExamplesAndUniformity) {
  Rng rng(11);
  const auto c = random_candidates(10, rng, 1);
  auto all = select_random(c, 10, 3);
  EXPECT_EQ(all.size(), 10u);
  EXPECT_EQ(select_random(c, 4, 3), select_random(c, 4, 3));
  std::map<std::size_t, int> counts;
  for (std::uint64_t s = 0; s < 10000; ++s) ++counts[select_random(c, 1, s)[0]];
  EXPECT_EQ(counts.size(), 10u);
  for (const auto& [id, n] : counts) EXPECT_NEAR(n, 1000, 150) << "id " << id;
}

}  // namespace
}  // namespace mma
