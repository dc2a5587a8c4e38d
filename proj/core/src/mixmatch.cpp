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

#include "mma/mixmatch.hpp"

#include <algorithm>
#include <cmath>

#include "mma/error.hpp"

namespace mma {

using autodiff::Matrix;
using autodiff::Tape;
using autodiff::Var;

void MixMatchConfig::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("must be > 0", "mixmatch.temperature");
  if (augmentations < 1) throw ConfigError("must be >= 1", "mixmatch.augmentations");
  if (!(alpha > 0.0)) throw ConfigError("must be > 0", "mixmatch.alpha");
  if (!(lambda_u >= 0.0)) throw ConfigError("must be >= 0", "mixmatch.lambda_u");
  if (batch_size < 1) throw ConfigError("must be >= 1", "mixmatch.batch_size");
}

ProbVector sharpen(const ProbVector& p, double temperature) {
  if (!(temperature > 0.0)) throw PreconditionError("sharpening temperature must be > 0");
  if (p.size() == 0) throw PreconditionError("cannot sharpen an empty distribution");
  std::vector<double> logits(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) logits[i] = std::log(std::max(p[i], kProbEpsilon)) / temperature;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (auto& x : logits) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (auto& x : logits) x /= sum;
  return ProbVector(std::move(logits));
}

ProbVector guess_label(std::span<const ProbVector> augmented_predictions, double temperature) {
  return sharpen(mean_of(augmented_predictions), temperature);
}

GuessResult guess_label(const Predictor& model, std::span<const double> x, const ImageShape& shape,
                        const AugmentationPolicy& policy, const MixMatchConfig& config, Rng& draws) {
  GuessResult out;
  std::vector<ProbVector> preds;
  for (std::size_t k = 0; k < config.augmentations; ++k) {
    out.augmentations.push_back(augment(x, shape, policy, draws));
    preds.push_back(model.predict(out.augmentations.back()));
  }
  out.label = guess_label(preds, config.temperature);
  return out;
}

LabeledPoint mixup(const LabeledPoint& first, const LabeledPoint& second, double lambda) {
  if (first.features.size() != second.features.size()) throw PreconditionError("mixup: feature dimension mismatch");
  if (first.label.size() != second.label.size()) throw PreconditionError("mixup: class count mismatch");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw PreconditionError("mixup: lambda must be in [0, 1]");
  const double w = std::max(lambda, 1.0 - lambda);
  LabeledPoint out;
  out.features.resize(first.features.size());
  for (std::size_t i = 0; i < out.features.size(); ++i) {
    out.features[i] = w * first.features[i] + (1.0 - w) * second.features[i];
  }
  std::vector<double> p(first.label.size());
  for (std::size_t c = 0; c < p.size(); ++c) p[c] = w * first.label[c] + (1.0 - w) * second.label[c];
  out.label = ProbVector(std::move(p));
  return out;
}

double mixup_draw(double alpha, Rng& rng) { return rng.beta(alpha, alpha); }

MixDraws draw_mix(std::size_t batch_size, double alpha, Rng& rng) {
  MixDraws d;
  d.permutation = rng.permutation(2 * batch_size);
  d.lambdas.resize(2 * batch_size);
  for (auto& l : d.lambdas) l = mixup_draw(alpha, rng);
  return d;
}

MixBatch assemble(std::span<const LabeledPoint> labeled, std::span<const LabeledPoint> guessed,
                  const MixDraws& draws) {
  const std::size_t b = labeled.size();
  if (guessed.size() != b) throw PreconditionError("assemble: labeled and guessed batches differ in size");
  if (draws.permutation.size() != 2 * b || draws.lambdas.size() != 2 * b) {
    throw PreconditionError("assemble: draws do not match batch size");
  }
  auto w_at = [&](std::size_t i) -> const LabeledPoint& {
    const auto src = draws.permutation[i];
    if (src >= 2 * b) throw PreconditionError("assemble: permutation index out of range");
    return src < b ? labeled[src] : guessed[src - b];
  };
  MixBatch out;
  out.x_prime.reserve(b);
  out.u_prime.reserve(b);
  for (std::size_t i = 0; i < b; ++i) out.x_prime.push_back(mixup(labeled[i], w_at(i), draws.lambdas[i]));
  for (std::size_t i = 0; i < b; ++i) out.u_prime.push_back(mixup(guessed[i], w_at(b + i), draws.lambdas[b + i]));
  return out;
}

double effective_lambda_u(const MixMatchConfig& config, std::uint64_t step) {
  if (config.ramp_steps == 0 || step >= config.ramp_steps) return config.lambda_u;
  return config.lambda_u * (static_cast<double>(step) / static_cast<double>(config.ramp_steps));
}

LossTerms mixmatch_loss(const MixBatch& batch, std::span<const ProbVector> x_probs,
                        std::span<const ProbVector> u_probs, double lambda_u, bool unsquared_l2) {
  if (x_probs.size() != batch.x_prime.size() || u_probs.size() != batch.u_prime.size()) {
    throw PreconditionError("loss: prediction count does not match batch");
  }
  LossTerms t;
  for (std::size_t i = 0; i < x_probs.size(); ++i) {
    const auto& target = batch.x_prime[i].label;
    for (std::size_t c = 0; c < target.size(); ++c) {
      t.labeled -= target[c] * std::log(std::max(x_probs[i][c], kProbEpsilon));
    }
  }
  if (!x_probs.empty()) t.labeled /= static_cast<double>(x_probs.size());

  std::size_t classes = 0;
  for (std::size_t i = 0; i < u_probs.size(); ++i) {
    const auto& q = batch.u_prime[i].label;
    classes = q.size();
    double sq = 0.0;
    for (std::size_t c = 0; c < q.size(); ++c) {
      const double d = q[c] - u_probs[i][c];
      sq += d * d;
    }
    t.unlabeled += unsquared_l2 ? std::sqrt(sq) : sq;
  }
  if (!u_probs.empty()) t.unlabeled /= static_cast<double>(classes * u_probs.size());
  t.total = t.labeled + lambda_u * t.unlabeled;
  return t;
}

LossTerms mixmatch_loss(const MixBatch& batch, const Predictor& model, double lambda_u, bool unsquared_l2) {
  std::vector<ProbVector> px;
  std::vector<ProbVector> pu;
  for (const auto& p : batch.x_prime) px.push_back(model.predict(p.features));
  for (const auto& p : batch.u_prime) pu.push_back(model.predict(p.features));
  return mixmatch_loss(batch, px, pu, lambda_u, unsquared_l2);
}

namespace {

Matrix stack_features(std::span<const LabeledPoint> a, std::span<const LabeledPoint> b) {
  const std::size_t dims = !a.empty() ? a.front().features.size() : b.front().features.size();
  Matrix m(a.size() + b.size(), dims);
  std::size_t r = 0;
  for (const auto* part : {&a, &b}) {
    for (const auto& p : *part) {
      if (p.features.size() != dims) throw PreconditionError("loss: inconsistent feature dimensions");
      std::copy(p.features.begin(), p.features.end(), m.data.begin() + static_cast<std::ptrdiff_t>(r * dims));
      ++r;
    }
  }
  return m;
}

Matrix stack_labels(std::span<const LabeledPoint> points, std::size_t classes) {
  Matrix m(points.size(), classes);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].label.size() != classes) throw PreconditionError("loss: inconsistent class counts");
    std::copy(points[i].label.begin(), points[i].label.end(), m.data.begin() + static_cast<std::ptrdiff_t>(i * classes));
  }
  return m;
}

}  // namespace

Var mixmatch_loss_graph(Tape& tape, const BoundModel& model, const MixBatch& batch, double lambda_u,
                        bool unsquared_l2) {
  const std::size_t nx = batch.x_prime.size();
  const std::size_t nu = batch.u_prime.size();
  if (nx + nu == 0) throw PreconditionError("loss: empty batch");
  const std::size_t classes = model.model().shape().classes;

  const Var inputs = tape.constant(stack_features(batch.x_prime, batch.u_prime));
  const Var probs = model.probs(inputs);
  Var total = tape.constant(Matrix::scalar(0.0));
  if (nx > 0) {
    const Var px = tape.slice_rows(probs, 0, nx);
    const Var targets = tape.constant(stack_labels(batch.x_prime, classes));
    const Var ce = tape.sum(tape.mul(targets, tape.log(px, kProbEpsilon)));
    total = tape.add(total, tape.scale(ce, -1.0 / static_cast<double>(nx)));
  }
  if (nu > 0) {
    const Var pu = tape.slice_rows(probs, nx, nx + nu);
    const Var targets = tape.constant(stack_labels(batch.u_prime, classes));
    const Var sq = tape.square(tape.sub(targets, pu));
    const Var per_row = unsquared_l2 ? tape.sqrt(tape.sum_rows(sq)) : sq;
    const Var lu = tape.scale(tape.sum(per_row), 1.0 / static_cast<double>(classes * nu));
    total = tape.add(total, tape.scale(lu, lambda_u));
  }
  return total;
}

}  // namespace mma
