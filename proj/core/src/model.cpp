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

#include "mma/model.hpp"

#include <algorithm>
#include <cmath>

#include "mma/error.hpp"
#include "mma/rng.hpp"

namespace mma {

using autodiff::Matrix;
using autodiff::Tape;
using autodiff::Var;

Classifier::Classifier(ModelShape shape, std::uint64_t seed) : shape_(std::move(shape)) {
  if (shape_.input_dim == 0) throw ConfigError("input dimension must be positive", "model.input_dim");
  if (shape_.classes < 2) throw ConfigError("need at least two classes", "model.classes");
  if (shape_.hidden.empty()) throw ConfigError("need at least one hidden layer", "model.hidden");
  for (const auto w : shape_.hidden) {
    if (w == 0) throw ConfigError("hidden widths must be positive", "model.hidden");
  }

  std::vector<std::size_t> widths{shape_.input_dim};
  widths.insert(widths.end(), shape_.hidden.begin(), shape_.hidden.end());
  widths.push_back(shape_.classes);

  std::size_t offset = 0;
  for (std::size_t layer = 0; layer + 1 < widths.size(); ++layer) {
    const auto tag = "layer" + std::to_string(layer);
    blocks_.push_back({tag + ".weight", offset, widths[layer], widths[layer + 1], true});
    offset += widths[layer] * widths[layer + 1];
    blocks_.push_back({tag + ".bias", offset, 1, widths[layer + 1], false});
    offset += widths[layer + 1];
  }
  params_.assign(offset, 0.0);

  Rng rng = Rng::stream(seed, "model-init");
  for (const auto& b : blocks_) {
    if (!b.is_weight) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(b.rows));
    for (std::size_t i = 0; i < b.size(); ++i) params_[b.offset + i] = rng.uniform(-bound, bound);
  }
  ema_ = params_;
}

void Classifier::check_input(std::size_t dim) const {
  if (dim != shape_.input_dim) {
    throw PreconditionError("feature dimension " + std::to_string(dim) + " does not match model input " +
                            std::to_string(shape_.input_dim));
  }
}

ForwardResult Classifier::forward(const Matrix& inputs, bool use_ema) const {
  check_input(inputs.cols);
  const auto& theta = active(use_ema);
  Matrix act = inputs;
  Matrix next;
  ForwardResult out;
  for (std::size_t layer = 0; layer * 2 < blocks_.size(); ++layer) {
    const auto& wb = blocks_[2 * layer];
    const auto& bb = blocks_[2 * layer + 1];
    const auto w = Matrix::from(wb.rows, wb.cols, std::span<const double>(theta).subspan(wb.offset, wb.size()));
    autodiff::matmul_into(act, w, next);
    for (std::size_t i = 0; i < next.rows; ++i) {
      for (std::size_t j = 0; j < next.cols; ++j) next(i, j) += theta[bb.offset + j];
    }
    const bool is_head = 2 * layer + 2 == blocks_.size();
    if (!is_head) {
      for (auto& x : next.data) x = x > 0.0 ? x : shape_.leaky_slope * x;
      if (2 * layer + 4 == blocks_.size()) out.embedding = next;
    } else {
      for (std::size_t i = 0; i < next.rows; ++i) {
        double* r = next.data.data() + i * next.cols;
        const double mx = *std::max_element(r, r + next.cols);
        double s = 0.0;
        for (std::size_t j = 0; j < next.cols; ++j) {
          r[j] = std::exp(r[j] - mx);
          s += r[j];
        }
        for (std::size_t j = 0; j < next.cols; ++j) r[j] /= s;
      }
      out.probs = next;
    }
    std::swap(act, next);
  }
  return out;
}

ProbVector Classifier::predict(std::span<const double> x, bool use_ema) const {
  check_input(x.size());
  auto out = forward(Matrix::from(1, x.size(), x), use_ema);
  return ProbVector(std::move(out.probs.data));
}

std::vector<double> Classifier::embed(std::span<const double> x, bool use_ema) const {
  check_input(x.size());
  auto out = forward(Matrix::from(1, x.size(), x), use_ema);
  return std::move(out.embedding.data);
}

void Classifier::zero_output_layer() {
  for (std::size_t k = blocks_.size() - 2; k < blocks_.size(); ++k) {
    const auto& b = blocks_[k];
    std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(b.offset), b.size(), 0.0);
    std::fill_n(ema_.begin() + static_cast<std::ptrdiff_t>(b.offset), b.size(), 0.0);
  }
}

ClassifierSnapshot::ClassifierSnapshot(const Classifier& model, bool use_ema) : model_(model), use_ema_(use_ema) {}

OptimizerState::OptimizerState(const Classifier& model, OptimizerConfig cfg)
    : config(cfg), first_moment(model.num_params(), 0.0), second_moment(model.num_params(), 0.0) {
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("must be positive", "optimizer.learning_rate");
  if (cfg.weight_decay < 0.0) throw ConfigError("must be >= 0", "optimizer.weight_decay");
  if (cfg.ema_decay < 0.0 || cfg.ema_decay > 1.0) throw ConfigError("must be in [0, 1]", "optimizer.ema_decay");
  if (cfg.beta1 < 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 < 0.0 || cfg.beta2 >= 1.0) {
    throw ConfigError("Adam betas must be in [0, 1)", "model.beta");
  }
}

void train_step(Classifier& model, OptimizerState& opt, std::span<const double> grad) {
  auto& theta = model.params();
  if (grad.size() != theta.size()) throw PreconditionError("gradient shape does not match parameters");
  if (opt.first_moment.size() != theta.size() || opt.second_moment.size() != theta.size()) {
    throw PreconditionError("optimizer moments do not match parameters");
  }
  for (const auto& b : model.blocks()) {
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (!std::isfinite(grad[b.offset + i])) {
        throw NumericError("non-finite gradient in parameter block '" + b.name + "'");
      }
    }
  }

  const auto& c = opt.config;
  const auto t = static_cast<double>(opt.step_count + 1);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    auto& m = opt.first_moment[i];
    auto& v = opt.second_moment[i];
    m = c.beta1 * m + (1.0 - c.beta1) * grad[i];
    v = c.beta2 * v + (1.0 - c.beta2) * grad[i] * grad[i];
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    theta[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
  if (c.weight_decay > 0.0) {
    const double keep = 1.0 - c.learning_rate * c.weight_decay;
    for (const auto& b : model.blocks()) {
      if (!b.is_weight) continue;
      for (std::size_t i = 0; i < b.size(); ++i) theta[b.offset + i] *= keep;
    }
  }
  auto& ema = model.ema_params();
  const double d = c.ema_decay;
  for (std::size_t i = 0; i < theta.size(); ++i) ema[i] = d * ema[i] + (1.0 - d) * theta[i];
  ++opt.step_count;
}

BoundModel::BoundModel(Tape& tape, const Classifier& model, bool use_ema) : tape_(&tape), model_(&model) {
  const auto& theta = model.active(use_ema);
  for (const auto& b : model.blocks()) {
    params_.push_back(tape.variable(
        Matrix::from(b.rows, b.cols, std::span<const double>(theta).subspan(b.offset, b.size()))));
  }
}

Var BoundModel::hidden_stack(Var inputs) const {
  if (inputs.value().cols != model_->shape().input_dim) {
    throw PreconditionError("feature dimension does not match model input");
  }
  const double slope = model_->shape().leaky_slope;
  Var act = inputs;
  for (std::size_t k = 0; k + 2 < params_.size(); k += 2) {
    act = tape_->leaky_relu(tape_->add_row(tape_->matmul(act, params_[k]), params_[k + 1]), slope);
  }
  return act;
}

Var BoundModel::embedding(Var inputs) const { return hidden_stack(inputs); }

Var BoundModel::logits(Var inputs) const {
  const auto n = params_.size();
  return tape_->add_row(tape_->matmul(hidden_stack(inputs), params_[n - 2]), params_[n - 1]);
}

Var BoundModel::probs(Var inputs) const { return tape_->softmax_rows(logits(inputs)); }

GradientResult gradient(const Classifier& model, const LossBuilder& loss) {
  Tape tape;
  BoundModel bound(tape, model);
  const Var root = loss(tape, bound);
  if (root.tape() != &tape || root.value().size() != 1) {
    throw PreconditionError("loss must be a scalar on the supplied tape");
  }
  tape.backward(root);

  GradientResult out;
  out.loss = root.value().data[0];
  out.gradient.assign(model.num_params(), 0.0);
  for (std::size_t k = 0; k < model.blocks().size(); ++k) {
    const auto& b = model.blocks()[k];
    const auto& p = bound.params()[k];
    if (tape.grad(p).size() == 0) continue;  // parameter not reached by the loss
    std::copy(tape.grad(p).data.begin(), tape.grad(p).data.end(),
              out.gradient.begin() + static_cast<std::ptrdiff_t>(b.offset));
  }
  return out;
}

}  // namespace mma
