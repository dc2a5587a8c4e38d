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
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mma::autodiff {

// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  static Matrix from(std::size_t r, std::size_t c, std::span<const double> values);
  static Matrix scalar(double v) { return Matrix(1, 1, v); }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return std::span<const double>(data).subspan(r * cols, cols); }
  std::size_t size() const noexcept { return data.size(); }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

// out = a * b, (n x k) * (k x m).
void matmul_into(const Matrix& a, const Matrix& b, Matrix& out);

enum class Op {
  kLeaf,
  kMatmul,
  kAddRow,
  kAdd,
  kSub,
  kMul,
  kScale,
  kLeakyRelu,
  kSoftmaxRows,
  kLog,
  kSquare,
  kSqrt,
  kSum,
  kSumRows,
  kSliceRows,
  kOpaque,
};

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  const Matrix& value() const;
  const Matrix& grad() const;
  std::size_t index() const noexcept { return index_; }
  Tape* tape() const noexcept { return tape_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}
  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

// Reverse-mode tape. Nodes are appended in evaluation order, so reverse
// creation order is a valid topological order for backpropagation.
class Tape {
 public:
  Var variable(Matrix value);  // differentiable leaf
  Var constant(Matrix value);

  Var matmul(Var a, Var b);
  Var add_row(Var a, Var row);  // broadcast a 1 x m row over every row of a
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var scale(Var a, double factor);
  Var leaky_relu(Var a, double slope);
  Var softmax_rows(Var a);
  // log(max(x, eps)); the derivative is zero where the clamp is active.
  Var log(Var a, double eps);
  Var square(Var a);
  // sqrt(x); derivative taken as zero at x == 0.
  Var sqrt(Var a);
  Var sum(Var a);       // -> 1 x 1
  Var sum_rows(Var a);  // -> n x 1
  Var slice_rows(Var a, std::size_t begin, std::size_t end);
  // Forward-only primitive; backpropagating through it throws
  // UnsupportedPrimitive naming `name`.
  Var opaque(std::string name, Var a, const std::function<Matrix(const Matrix&)>& fn);

  // Seeds d(root)/d(root) = 1 and accumulates gradients into every node
  // reachable from `root`. `root` must be 1 x 1.
  void backward(Var root);

  const Matrix& value(Var v) const { return nodes_[v.index_].value; }
  const Matrix& grad(Var v) const { return nodes_[v.index_].grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Op op = Op::kLeaf;
    std::size_t a = 0;
    std::size_t b = 0;
    double attr = 0.0;
    std::size_t attr_index = 0;
    bool requires_grad = false;
    bool has_grad = false;
    std::string name;
    Matrix value;
    Matrix grad;
  };

  Var push(Node node);
  void check_owner(Var v) const;
  void accumulate(std::size_t index, const Matrix& g);
  Matrix& grad_buffer(std::size_t index);

  std::vector<Node> nodes_;
};

}  // namespace mma::autodiff
