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

#include "mma/autodiff.hpp"
#include "mma/data.hpp"
#include "mma/model.hpp"
#include "mma/prob.hpp"
#include "mma/rng.hpp"

namespace mma {

// Clamp applied before logs and before exponentiation in sharpening.
inline constexpr double kProbEpsilon = 1e-8;

struct MixMatchConfig {
  double temperature = 0.5;
  std::size_t augmentations = 2;  // K
  double alpha = 0.75;
  double lambda_u = 75.0;
  std::uint64_t ramp_steps = 0;  // 0 = fixed weight
  std::size_t batch_size = 32;
  bool unsquared_l2 = false;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Temperature sharpening p_i^(1/T) / sum_j p_j^(1/T), evaluated in the log
// domain on max(p_i, eps).
ProbVector sharpen(const ProbVector& p, double temperature);

// Sharpened mean of K predictions on augmented copies of one example.
ProbVector guess_label(std::span<const ProbVector> augmented_predictions, double temperature);

struct GuessResult {
  ProbVector label;
  std::vector<std::vector<double>> augmentations;  // the K inputs that were scored
};

// Draws K augmentations of `x` from `draws` (in order), predicts each and
// returns the sharpened average.
GuessResult guess_label(const Predictor& model, std::span<const double> x, const ImageShape& shape,
                        const AugmentationPolicy& policy, const MixMatchConfig& config, Rng& draws);

// Features paired with a (possibly soft) label.
struct LabeledPoint {
  std::vector<double> features;
  ProbVector label;

  friend bool operator==(const LabeledPoint&, const LabeledPoint&) = default;
};

// Convex combination with weight max(lambda, 1 - lambda) on `first`.
LabeledPoint mixup(const LabeledPoint& first, const LabeledPoint& second, double lambda);
double mixup_draw(double alpha, Rng& rng);

// Random choices consumed by batch assembly: a permutation of 0..2B-1 over
// the concatenation [X^, U^], and 2B Beta(alpha, alpha) draws (first B for
// X', last B for U').
struct MixDraws {
  std::vector<std::size_t> permutation;
  std::vector<double> lambdas;
};

MixDraws draw_mix(std::size_t batch_size, double alpha, Rng& rng);

struct MixBatch {
  std::vector<LabeledPoint> x_prime;
  std::vector<LabeledPoint> u_prime;
};

// X' = MixUp(X^, W[0..B)), U' = MixUp(U^, W[B..2B)) with W = shuffled X^ u U^.
MixBatch assemble(std::span<const LabeledPoint> labeled, std::span<const LabeledPoint> guessed,
                  const MixDraws& draws);

// lambda_u * min(1, step / ramp_steps); lambda_u itself when ramp_steps == 0.
double effective_lambda_u(const MixMatchConfig& config, std::uint64_t step);

struct LossTerms {
  double labeled = 0.0;    // L_X, mean soft cross-entropy
  double unlabeled = 0.0;  // L_U, mean squared L2 over |C|
  double total = 0.0;      // L_X + lambda_u * L_U
};

// Value route: loss from model outputs already computed on X' and U'.
LossTerms mixmatch_loss(const MixBatch& batch, std::span<const ProbVector> x_probs,
                        std::span<const ProbVector> u_probs, double lambda_u, bool unsquared_l2 = false);
LossTerms mixmatch_loss(const MixBatch& batch, const Predictor& model, double lambda_u, bool unsquared_l2 = false);

// Differentiable route: the same loss built on a tape for gradient().
autodiff::Var mixmatch_loss_graph(autodiff::Tape& tape, const BoundModel& model, const MixBatch& batch,
                                  double lambda_u, bool unsquared_l2 = false);

}  // namespace mma
