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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mma/autodiff.hpp"
#include "mma/prob.hpp"

namespace mma {

// Anything that maps a feature vector to class probabilities and an
// embedding. Query scoring and label guessing depend only on this.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t num_classes() const = 0;
  virtual ProbVector predict(std::span<const double> x) const = 0;
  virtual std::vector<double> embed(std::span<const double> x) const = 0;
};

struct ModelShape {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden{64, 64};
  std::size_t classes = 0;
  double leaky_slope = 0.1;

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

// A contiguous slice of the flat parameter vector.
struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool is_weight = false;

  std::size_t size() const noexcept { return rows * cols; }
  friend bool operator==(const ParamBlock&, const ParamBlock&) = default;
};

struct ForwardResult {
  autodiff::Matrix embedding;  // n x embedding_dim
  autodiff::Matrix probs;      // n x classes
};

// MLP with leaky-ReLU hidden layers and a softmax head. Parameters live in
// one flat vector (weights stored in x out, then bias, per layer) with an EMA
// shadow copy of identical shape.
class Classifier {
 public:
  Classifier(ModelShape shape, std::uint64_t seed);

  const ModelShape& shape() const noexcept { return shape_; }
  std::size_t embedding_dim() const noexcept { return shape_.hidden.back(); }
  std::size_t num_params() const noexcept { return params_.size(); }
  const std::vector<ParamBlock>& blocks() const noexcept { return blocks_; }

  std::vector<double>& params() noexcept { return params_; }
  const std::vector<double>& params() const noexcept { return params_; }
  std::vector<double>& ema_params() noexcept { return ema_; }
  const std::vector<double>& ema_params() const noexcept { return ema_; }
  const std::vector<double>& active(bool use_ema) const noexcept { return use_ema ? ema_ : params_; }

  ProbVector predict(std::span<const double> x, bool use_ema = false) const;
  std::vector<double> embed(std::span<const double> x, bool use_ema = false) const;
  // Batched forward pass over the rows of `inputs`.
  ForwardResult forward(const autodiff::Matrix& inputs, bool use_ema = false) const;

  // Zeroes the softmax head weights and bias in both parameter sets.
  void zero_output_layer();

  friend bool operator==(const Classifier&, const Classifier&) = default;

 private:
  void check_input(std::size_t dim) const;

  ModelShape shape_;
  std::vector<ParamBlock> blocks_;
  std::vector<double> params_;
  std::vector<double> ema_;
};

// Immutable copy of one parameter set of a classifier.
class ClassifierSnapshot : public Predictor {
 public:
  ClassifierSnapshot(const Classifier& model, bool use_ema);

  std::size_t input_dim() const override { return model_.shape().input_dim; }
  std::size_t num_classes() const override { return model_.shape().classes; }
  ProbVector predict(std::span<const double> x) const override { return model_.predict(x, use_ema_); }
  std::vector<double> embed(std::span<const double> x) const override { return model_.embed(x, use_ema_); }
  ForwardResult forward(const autodiff::Matrix& inputs) const { return model_.forward(inputs, use_ema_); }

 private:
  Classifier model_;
  bool use_ema_;
};

struct OptimizerConfig {
  double learning_rate = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  double ema_decay = 0.999;
};

struct OptimizerState {
  OptimizerConfig config;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step_count = 0;

  OptimizerState() = default;
  OptimizerState(const Classifier& model, OptimizerConfig cfg);

  friend bool operator==(const OptimizerState& a, const OptimizerState& b) {
    return a.first_moment == b.first_moment && a.second_moment == b.second_moment && a.step_count == b.step_count;
  }
};

// Bias-corrected Adam step, then decoupled weight decay
// theta <- theta * (1 - lr * wd) on weight blocks only, then
// ema <- d * ema + (1 - d) * theta.
void train_step(Classifier& model, OptimizerState& optimizer, std::span<const double> gradient);

// Model parameters bound as differentiable leaves of a tape.
class BoundModel {
 public:
  BoundModel(autodiff::Tape& tape, const Classifier& model, bool use_ema = false);

  const std::vector<autodiff::Var>& params() const noexcept { return params_; }
  const Classifier& model() const noexcept { return *model_; }

  autodiff::Var embedding(autodiff::Var inputs) const;
  autodiff::Var logits(autodiff::Var inputs) const;
  autodiff::Var probs(autodiff::Var inputs) const;

 private:
  autodiff::Var hidden_stack(autodiff::Var inputs) const;

  autodiff::Tape* tape_;
  const Classifier* model_;
  std::vector<autodiff::Var> params_;
};

using LossBuilder = std::function<autodiff::Var(autodiff::Tape&, const BoundModel&)>;

struct GradientResult {
  double loss = 0.0;
  std::vector<double> gradient;  // flat, same layout as Classifier::params()
};

// Exact reverse-mode gradient of a scalar loss built on the model's
// raw parameters.
GradientResult gradient(const Classifier& model, const LossBuilder& loss);

}  // namespace mma
