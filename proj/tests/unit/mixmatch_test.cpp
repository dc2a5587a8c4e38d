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

#include <cmath>

#include "mma/error.hpp"
#include "mma/mixmatch.hpp"
#include "support/oracles.hpp"

namespace mma {
namespace {

using autodiff::Tape;

ProbVector random_prob(std::size_t n, Rng& rng) {
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& v : p) {
    v = rng.uniform() * (rng.bernoulli(0.1) ? 0.0 : 1.0);
    s += v;
  }
  if (s == 0.0) return ProbVector::uniform(n);
  for (auto& v : p) v /= s;
  return ProbVector(std::move(p));
}

// Predictor returning a fixed distribution per call, in order.
class ScriptedPredictor : public Predictor {
 public:
  explicit ScriptedPredictor(std::vector<ProbVector> outputs) : outputs_(std::move(outputs)) {}
  std::size_t input_dim() const override { return 2; }
  std::size_t num_classes() const override { return outputs_.front().size(); }
  ProbVector predict(std::span<const double>) const override { return outputs_[next_++ % outputs_.size()]; }
  std::vector<double> embed(std::span<const double> x) const override { return {x.begin(), x.end()}; }

 private:
  std::vector<ProbVector> outputs_;
  mutable std::size_t next_ = 0;
};

TEST(Sharpen, Examples) {
  const auto u = sharpen(ProbVector::uniform(4), 0.3);
  for (const double v : u) EXPECT_NEAR(v, 0.25, 1e-12);
  const ProbVector p{0.1, 0.6, 0.3};
  const auto same = sharpen(p, 1.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(same[i], p[i], 1e-12);
  const auto s = sharpen(ProbVector{0.8, 0.2}, 0.5);
  EXPECT_NEAR(s[0], 0.94118, 1e-5);
  EXPECT_NEAR(s[1], 0.05882, 1e-5);
}

TEST(Sharpen, ZeroEntriesStayFinite) {
  const auto s = sharpen(ProbVector{1.0, 0.0, 0.0}, 0.5);
  EXPECT_TRUE(s.is_valid());
  EXPECT_NEAR(s[0], 1.0, 1e-12);
  EXPECT_THROW(sharpen(ProbVector{0.5, 0.5}, 0.0), PreconditionError);
}

TEST(Sharpen, RandomizedProperties) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto p = random_prob(2 + rng.below(9), rng);
    const double t = rng.uniform(0.05, 1.0);
    const auto s = sharpen(p, t);
    ASSERT_TRUE(s.is_valid(1e-9));
    EXPECT_EQ(s.argmax(), p.argmax());
    EXPECT_LE(s.entropy(), p.entropy() + 1e-6);  // epsilon floor on exact zeros
    // Agrees with the direct power formula on strictly positive inputs.
    bool positive = true;
    for (const double v : p) positive = positive && v > 1e-3;
    if (positive) {
      const auto ref = oracle::sharpen(p.vector(), t);
      for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(s[i], ref[i], 1e-9);
    }
  }
}

TEST(GuessLabel, StubbedPredictions) {
  const std::vector<ProbVector> preds{{0.6, 0.4}, {0.8, 0.2}};
  const auto q = guess_label(preds, 0.5);
  EXPECT_NEAR(q[0], 0.84483, 1e-5);
  EXPECT_NEAR(q[1], 0.15517, 1e-5);

  const ScriptedPredictor model(preds);
  MixMatchConfig cfg;
  Rng draws(0);
  const auto r = guess_label(model, std::vector<double>{0.0, 1.0}, {}, {}, cfg, draws);
  EXPECT_EQ(r.augmentations.size(), 2u);
  EXPECT_NEAR(r.label[0], 0.84483, 1e-5);
}

TEST(GuessLabel, DegenerateAndUniform) {
  const Classifier m(ModelShape{2, {4}, 3, 0.1}, 2);
  const ClassifierSnapshot snap(m, false);
  MixMatchConfig cfg;
  cfg.augmentations = 1;
  cfg.temperature = 1.0;
  Rng draws(1);
  const std::vector<double> x{0.2, -0.4};
  const auto q = guess_label(snap, x, {}, {}, cfg, draws).label;
  const auto p = m.predict(x);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(q[i], p[i], 1e-15);

  Classifier flat(ModelShape{2, {4}, 3, 0.1}, 2);
  flat.zero_output_layer();
  const ClassifierSnapshot flat_snap(flat, false);
  cfg.augmentations = 3;
  cfg.temperature = 0.3;
  AugmentationPolicy jitter{AugmentKind::kJitter, 0, 0.5};
  const auto uq = guess_label(flat_snap, x, {}, jitter, cfg, draws).label;
  for (const double v : uq) EXPECT_NEAR(v, 1.0 / 3.0, 1e-12);
}

TEST(Mixup, Examples) {
  const LabeledPoint a{{1.0, 0.0}, {1.0, 0.0}};
  const LabeledPoint b{{0.0, 1.0}, {0.0, 1.0}};
  const auto m = mixup(a, b, 0.3);
  EXPECT_NEAR(m.features[0], 0.7, 1e-15);
  EXPECT_NEAR(m.features[1], 0.3, 1e-15);
  EXPECT_NEAR(m.label[0], 0.7, 1e-15);
  EXPECT_NEAR(m.label[1], 0.3, 1e-15);
  const auto mid = mixup(a, b, 0.5);
  EXPECT_EQ(mid.features, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(mixup(a, a, 0.123).features, a.features);
  EXPECT_EQ(mixup(a, a, 0.123).label, a.label);
  EXPECT_THROW(mixup(a, LabeledPoint{{1.0}, {1.0, 0.0}}, 0.5), PreconditionError);
}

TEST(Mixup, RandomizedWeightIsAtLeastHalf) {
  Rng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const double alpha = rng.uniform(0.1, 3.0);
    const double lambda = mixup_draw(alpha, rng);
    const LabeledPoint a{{1.0}, random_prob(3, rng)};
    const LabeledPoint b{{0.0}, random_prob(3, rng)};
    const auto m = mixup(a, b, lambda);
    const double w = m.features[0];  // recovers lambda' since x1 = 1, x2 = 0
    EXPECT_GE(w, 0.5);
    EXPECT_LE(w, 1.0);
    EXPECT_TRUE(m.label.is_valid(1e-9));
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(m.label[c], w * a.label[c] + (1.0 - w) * b.label[c], 1e-12);
  }
}

TEST(Assemble, SmallestBatch) {
  const std::vector<LabeledPoint> x{{{1.0}, {1.0, 0.0}}};
  const std::vector<LabeledPoint> u{{{3.0}, {0.2, 0.8}}};
  // W = [U^, X^]: X' mixes x with u, U' mixes u with x.
  const auto mb = assemble(x, u, MixDraws{{1, 0}, {0.25, 0.9}});
  EXPECT_NEAR(mb.x_prime[0].features[0], 0.75 * 1.0 + 0.25 * 3.0, 1e-15);
  EXPECT_NEAR(mb.u_prime[0].features[0], 0.9 * 3.0 + 0.1 * 1.0, 1e-15);
  // Identity permutation: both sides mix with themselves.
  const auto self = assemble(x, u, MixDraws{{0, 1}, {0.25, 0.9}});
  EXPECT_EQ(self.x_prime[0], x[0]);
  EXPECT_EQ(self.u_prime[0], u[0]);
}

TEST(Assemble, HandTracedBatchOfTwo) {
  const std::vector<LabeledPoint> x{{{0.0, 0.0}, {1.0, 0.0}}, {{1.0, 0.0}, {0.0, 1.0}}};
  const std::vector<LabeledPoint> u{{{0.0, 1.0}, {0.5, 0.5}}, {{1.0, 1.0}, {0.9, 0.1}}};
  const MixDraws d{{3, 0, 2, 1}, {0.2, 0.6, 0.5, 1.0}};
  const auto mb = assemble(x, u, d);
  // W = [u1, x0, u0, x1]; lambda' = [0.8, 0.6, 0.5, 1.0].
  EXPECT_NEAR(mb.x_prime[0].features[0], 0.8 * 0.0 + 0.2 * 1.0, 1e-15);
  EXPECT_NEAR(mb.x_prime[0].features[1], 0.2, 1e-15);
  EXPECT_NEAR(mb.x_prime[0].label[0], 0.8 + 0.2 * 0.9, 1e-15);
  EXPECT_NEAR(mb.x_prime[1].features[0], 0.6, 1e-15);
  EXPECT_NEAR(mb.x_prime[1].label[1], 0.6, 1e-15);
  EXPECT_NEAR(mb.u_prime[0].features[1], 1.0, 1e-15);
  EXPECT_NEAR(mb.u_prime[0].label[0], 0.5, 1e-15);
  EXPECT_EQ(mb.u_prime[1], u[1]);
}

TEST(Assemble, ConstantInputsGiveConstantBatch) {
  const LabeledPoint p{{0.3, 0.3}, {0.25, 0.75}};
  const std::vector<LabeledPoint> x(4, p);
  Rng rng(3);
  const auto mb = assemble(x, x, draw_mix(4, 0.75, rng));
  for (const auto& q : mb.x_prime) EXPECT_EQ(q, p);
  for (const auto& q : mb.u_prime) EXPECT_EQ(q, p);
}

TEST(Assemble, RandomizedLabelsStayValid) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t b = 1 + rng.below(8);
    std::vector<LabeledPoint> x;
    std::vector<LabeledPoint> u;
    for (std::size_t i = 0; i < b; ++i) {
      x.push_back({{rng.uniform()}, ProbVector::one_hot(3, rng.below(3))});
      u.push_back({{rng.uniform()}, random_prob(3, rng)});
    }
    const auto mb = assemble(x, u, draw_mix(b, 0.75, rng));
    ASSERT_EQ(mb.x_prime.size(), b);
    ASSERT_EQ(mb.u_prime.size(), b);
    for (const auto& q : mb.x_prime) EXPECT_TRUE(q.label.is_valid(1e-6));
    for (const auto& q : mb.u_prime) EXPECT_TRUE(q.label.is_valid(1e-6));
  }
  EXPECT_THROW(assemble(std::vector<LabeledPoint>(2), std::vector<LabeledPoint>(1), MixDraws{}), PreconditionError);
}

TEST(Loss, HandExamples) {
  MixBatch one_x{{{{0.0}, {1.0, 0.0}}}, {}};
  const std::vector<ProbVector> half{{0.5, 0.5}};
  EXPECT_NEAR(mixmatch_loss(one_x, half, {}, 75.0).labeled, 0.69315, 1e-5);

  MixBatch one_u{{}, {{{0.0}, {1.0, 0.0}}}};
  const auto t = mixmatch_loss(one_u, {}, half, 2.0);
  EXPECT_NEAR(t.unlabeled, 0.25, 1e-12);
  EXPECT_NEAR(t.total, 0.5, 1e-12);

  const std::vector<ProbVector> q{{0.3, 0.7}};
  MixBatch perfect{{}, {{{0.0}, q[0]}}};
  EXPECT_EQ(mixmatch_loss(perfect, {}, q, 75.0).unlabeled, 0.0);

  // Unsquared option: sqrt(0.5) / 2.
  EXPECT_NEAR(mixmatch_loss(one_u, {}, half, 1.0, true).unlabeled, std::sqrt(0.5) / 2.0, 1e-12);
}

TEST(Loss, ZeroProbabilityIsGuarded) {
  MixBatch b{{{{0.0}, {1.0, 0.0}}}, {}};
  const std::vector<ProbVector> zero{{0.0, 1.0}};
  const auto t = mixmatch_loss(b, zero, {}, 1.0);
  EXPECT_TRUE(std::isfinite(t.total));
  EXPECT_NEAR(t.labeled, -std::log(kProbEpsilon), 1e-9);
}

TEST(Loss, NonNegativeAndGraphMatchesValueRoute) {
  Rng rng(5);
  const Classifier m(ModelShape{2, {6, 5}, 3, 0.1}, 6);
  const ClassifierSnapshot snap(m, false);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t b = 1 + rng.below(5);
    std::vector<LabeledPoint> x;
    std::vector<LabeledPoint> u;
    for (std::size_t i = 0; i < b; ++i) {
      x.push_back({{rng.uniform(-1, 1), rng.uniform(-1, 1)}, ProbVector::one_hot(3, rng.below(3))});
      u.push_back({{rng.uniform(-1, 1), rng.uniform(-1, 1)}, random_prob(3, rng)});
    }
    const auto mb = assemble(x, u, draw_mix(b, 0.75, rng));
    const bool unsquared = trial % 2 == 1;
    const auto value = mixmatch_loss(mb, snap, 30.0, unsquared);
    EXPECT_GE(value.labeled, 0.0);
    EXPECT_GE(value.unlabeled, 0.0);
    const auto g = gradient(m, [&](Tape& t, const BoundModel& bm) { return mixmatch_loss_graph(t, bm, mb, 30.0, unsquared); });
    EXPECT_NEAR(g.loss, value.total, 1e-10 * std::max(1.0, value.total));
  }
}

TEST(Loss, CompositeGradientMatchesFiniteDifferences) {
  Rng rng(7);
  const Classifier m(ModelShape{2, {5}, 3, 0.1}, 8);
  std::vector<LabeledPoint> x;
  std::vector<LabeledPoint> u;
  for (int i = 0; i < 3; ++i) {
    x.push_back({{rng.uniform(-1, 1), rng.uniform(-1, 1)}, ProbVector::one_hot(3, rng.below(3))});
    u.push_back({{rng.uniform(-1, 1), rng.uniform(-1, 1)}, random_prob(3, rng)});
  }
  const auto mb = assemble(x, u, draw_mix(3, 0.75, rng));
  const auto g = gradient(m, [&](Tape& t, const BoundModel& bm) { return mixmatch_loss_graph(t, bm, mb, 10.0); });
  const auto f = [&](const std::vector<double>& theta) {
    double lx = 0.0;
    double lu = 0.0;
    for (const auto& p : mb.x_prime) lx += oracle::cross_entropy(p.label.vector(), oracle::mlp_probs(theta, {2, 5, 3}, 0.1, p.features));
    for (const auto& p : mb.u_prime) lu += oracle::squared_l2(p.label.vector(), oracle::mlp_probs(theta, {2, 5, 3}, 0.1, p.features));
    return lx / 3.0 + 10.0 * lu / 9.0;
  };
  for (std::size_t i = 0; i < m.num_params(); ++i) {
    const double fd = oracle::central_difference(f, m.params(), i, 1e-5);
    EXPECT_LE(std::abs(g.gradient[i] - fd), 1e-5 * std::max(1.0, std::abs(fd))) << "param " << i;
  }
}

TEST(LambdaU, Ramp) {
  MixMatchConfig c;
  c.lambda_u = 75.0;
  EXPECT_EQ(effective_lambda_u(c, 0), 75.0);
  c.ramp_steps = 100;
  EXPECT_EQ(effective_lambda_u(c, 0), 0.0);
  EXPECT_EQ(effective_lambda_u(c, 50), 37.5);
  EXPECT_EQ(effective_lambda_u(c, 100), 75.0);
  EXPECT_EQ(effective_lambda_u(c, 1000), 75.0);
}

TEST(MixMatchConfig, ValidationNamesField) {
  MixMatchConfig c;
  c.temperature = 0.0;
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "mixmatch.temperature");
  }
  c = {};
  c.alpha = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

}  // namespace
}  // namespace mma
