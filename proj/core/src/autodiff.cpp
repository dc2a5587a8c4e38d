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

#include "mma/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "mma/error.hpp"

namespace mma::autodiff {

Matrix Matrix::from(std::size_t r, std::size_t c, std::span<const double> values) {
  if (values.size() != r * c) throw PreconditionError("matrix shape does not match value count");
  Matrix m(r, c);
  std::copy(values.begin(), values.end(), m.data.begin());
  return m;
}

void matmul_into(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols != b.rows) throw PreconditionError("matmul shape mismatch");
  out.rows = a.rows;
  out.cols = b.cols;
  out.data.assign(a.rows * b.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* o = out.data.data() + i * b.cols;
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double x = a.data[i * a.cols + k];
      if (x == 0.0) continue;
      const double* br = b.data.data() + k * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) o[j] += x * br[j];
    }
  }
}

namespace {

// out += a^T * g, a is (n x k), g is (n x m), out is (k x m).
void add_at_b(const Matrix& a, const Matrix& g, Matrix& out) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* gr = g.data.data() + i * g.cols;
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double x = a.data[i * a.cols + k];
      if (x == 0.0) continue;
      double* o = out.data.data() + k * out.cols;
      for (std::size_t j = 0; j < g.cols; ++j) o[j] += x * gr[j];
    }
  }
}

// out += g * b^T, g is (n x m), b is (k x m), out is (n x k).
void add_a_bt(const Matrix& g, const Matrix& b, Matrix& out) {
  for (std::size_t i = 0; i < g.rows; ++i) {
    const double* gr = g.data.data() + i * g.cols;
    double* o = out.data.data() + i * out.cols;
    for (std::size_t k = 0; k < b.rows; ++k) {
      const double* br = b.data.data() + k * b.cols;
      double acc = 0.0;
      for (std::size_t j = 0; j < g.cols; ++j) acc += gr[j] * br[j];
      o[k] += acc;
    }
  }
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows != b.rows || a.cols != b.cols) throw PreconditionError(std::string(op) + ": shape mismatch");
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(*this); }
const Matrix& Var::grad() const { return tape_->grad(*this); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owner(Var v) const {
  if (v.tape_ != this || v.index_ >= nodes_.size()) throw PreconditionError("variable belongs to another tape");
}

Var Tape::variable(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  check_owner(a);
  check_owner(b);
  Node n;
  n.op = Op::kMatmul;
  n.a = a.index_;
  n.b = b.index_;
  matmul_into(nodes_[a.index_].value, nodes_[b.index_].value, n.value);
  n.requires_grad = nodes_[a.index_].requires_grad || nodes_[b.index_].requires_grad;
  return push(std::move(n));
}

Var Tape::add_row(Var a, Var row) {
  check_owner(a);
  check_owner(row);
  const auto& av = nodes_[a.index_].value;
  const auto& rv = nodes_[row.index_].value;
  if (rv.rows != 1 || rv.cols != av.cols) throw PreconditionError("add_row: bias must be 1 x cols");
  Node n;
  n.op = Op::kAddRow;
  n.a = a.index_;
  n.b = row.index_;
  n.value = av;
  for (std::size_t i = 0; i < av.rows; ++i) {
    for (std::size_t j = 0; j < av.cols; ++j) n.value(i, j) += rv.data[j];
  }
  n.requires_grad = nodes_[a.index_].requires_grad || nodes_[row.index_].requires_grad;
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  check_owner(a);
  check_owner(b);
  require_same_shape(nodes_[a.index_].value, nodes_[b.index_].value, "add");
  Node n;
  n.op = Op::kAdd;
  n.a = a.index_;
  n.b = b.index_;
  n.value = nodes_[a.index_].value;
  const auto& bv = nodes_[b.index_].value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data[i] += bv.data[i];
  n.requires_grad = nodes_[a.index_].requires_grad || nodes_[b.index_].requires_grad;
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  check_owner(a);
  check_owner(b);
  require_same_shape(nodes_[a.index_].value, nodes_[b.index_].value, "sub");
  Node n;
  n.op = Op::kSub;
  n.a = a.index_;
  n.b = b.index_;
  n.value = nodes_[a.index_].value;
  const auto& bv = nodes_[b.index_].value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data[i] -= bv.data[i];
  n.requires_grad = nodes_[a.index_].requires_grad || nodes_[b.index_].requires_grad;
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  check_owner(a);
  check_owner(b);
  require_same_shape(nodes_[a.index_].value, nodes_[b.index_].value, "mul");
  Node n;
  n.op = Op::kMul;
  n.a = a.index_;
  n.b = b.index_;
  n.value = nodes_[a.index_].value;
  const auto& bv = nodes_[b.index_].value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data[i] *= bv.data[i];
  n.requires_grad = nodes_[a.index_].requires_grad || nodes_[b.index_].requires_grad;
  return push(std::move(n));
}

Var Tape::scale(Var a, double factor) {
  check_owner(a);
  Node n;
  n.op = Op::kScale;
  n.a = a.index_;
  n.attr = factor;
  n.value = nodes_[a.index_].value;
  for (auto& x : n.value.data) x *= factor;
  n.requires_grad = nodes_[a.index_].requires_grad;
  return push(std::move(n));
}

Var Tape::leaky_relu(Var a, double slope) {
  check_owner(a);
  Node n;
  n.op = Op::kLeakyRelu;
  n.a = a.index_;
  n.attr = slope;
  n.value = nodes_[a.index_].value;
  for (auto& x : n.value.data) x = x > 0.0 ? x : slope * x;
  n.requires_grad = nodes_[a.index_].requires_grad;
  return push(std::move(n));
}

Var Tape::softmax_rows(Var a) {
  check_owner(a);
  Node n;
  n.op = Op::kSoftmaxRows;
  n.a = a.index_;
  n.value = nodes_[a.index_].value;
  auto& v = n.value;
  for (std::size_t i = 0; i < v.rows; ++i) {
    double* r = v.data.data() + i * v.cols;
    const double mx = *std::max_element(r, r + v.cols);
    double s = 0.0;
    for (std::size_t j = 0; j < v.cols; ++j) {
      r[j] = std::exp(r[j] - mx);
      s += r[j];
    }
    for (std::size_t j = 0; j < v.cols; ++j) r[j] /= s;
  }
  n.requires_grad = nodes_[a.index_].requires_grad;
  return push(std::move(n));
}

Var Tape::log(Var a, double eps) {
  check_owner(a);
  Node n;
  n.op = Op::kLog;
  n.a = a.index_;
  n.attr = eps;
  n.value = nodes_[a.index_].value;
  for (auto& x : n.value.data) x = std::log(std::max(x, eps));
  n.requires_grad = nodes_[a.index_].requires_grad;
  return push(std::move(n));
}

Var Tape::square(Var a) {
  check_owner(a);
  Node n;
  n.op = Op::kSquare;
  n.a = a.index_;
  n.value = nodes_[a.index_].value;
  for (auto& x : n.value.data) x *= x;
  n.requires_grad = nodes_[a.index_].requires_grad;
  return push(std::move(n));
}

Var Tape::sqrt(Var a) {
  check_owner(a);
  Node n;
  n.op = Op::kSqrt;
  n.a = a.index_;
  n.value = nodes_[a.index_].value;
  for (auto& x : n.value.data) {
    if (x < 0.0) throw NumericError("sqrt of negative value");
    x = std::sqrt(x);
  }
  n.requires_grad = nodes_[a.index_].requires_grad;
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  check_owner(a);
  Node n;
  n.op = Op::kSum;
  n.a = a.index_;
  double s = 0.0;
  for (const double x : nodes_[a.index_].value.data) s += x;
  n.value = Matrix::scalar(s);
  n.requires_grad = nodes_[a.index_].requires_grad;
  return push(std::move(n));
}

Var Tape::sum_rows(Var a) {
  check_owner(a);
  const auto& av = nodes_[a.index_].value;
  Node n;
  n.op = Op::kSumRows;
  n.a = a.index_;
  n.value = Matrix(av.rows, 1);
  for (std::size_t i = 0; i < av.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < av.cols; ++j) s += av(i, j);
    n.value.data[i] = s;
  }
  n.requires_grad = nodes_[a.index_].requires_grad;
  return push(std::move(n));
}

Var Tape::slice_rows(Var a, std::size_t begin, std::size_t end) {
  check_owner(a);
  const auto& av = nodes_[a.index_].value;
  if (begin > end || end > av.rows) throw PreconditionError("slice_rows out of range");
  Node n;
  n.op = Op::kSliceRows;
  n.a = a.index_;
  n.attr_index = begin;
  n.value = Matrix(end - begin, av.cols);
  std::copy(av.data.begin() + static_cast<std::ptrdiff_t>(begin * av.cols),
            av.data.begin() + static_cast<std::ptrdiff_t>(end * av.cols), n.value.data.begin());
  n.requires_grad = nodes_[a.index_].requires_grad;
  return push(std::move(n));
}

Var Tape::opaque(std::string name, Var a, const std::function<Matrix(const Matrix&)>& fn) {
  check_owner(a);
  Node n;
  n.op = Op::kOpaque;
  n.a = a.index_;
  n.name = std::move(name);
  n.value = fn(nodes_[a.index_].value);
  n.requires_grad = nodes_[a.index_].requires_grad;
  return push(std::move(n));
}

Matrix& Tape::grad_buffer(std::size_t index) {
  auto& n = nodes_[index];
  if (!n.has_grad) {
    n.grad = Matrix(n.value.rows, n.value.cols);
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::accumulate(std::size_t index, const Matrix& g) {
  auto& buf = grad_buffer(index);
  for (std::size_t i = 0; i < g.size(); ++i) buf.data[i] += g.data[i];
}

void Tape::backward(Var root) {
  check_owner(root);
  if (nodes_[root.index_].value.size() != 1) throw PreconditionError("backward root must be a scalar");
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = Matrix();
  }
  grad_buffer(root.index_).data[0] = 1.0;

  for (std::size_t idx = root.index_ + 1; idx-- > 0;) {
    if (!nodes_[idx].has_grad || !nodes_[idx].requires_grad) continue;
    const Op op = nodes_[idx].op;
    const std::size_t ia = nodes_[idx].a;
    const std::size_t ib = nodes_[idx].b;
    const Matrix& g = nodes_[idx].grad;
    const Matrix& out = nodes_[idx].value;
    const bool need_a = op != Op::kLeaf && nodes_[ia].requires_grad;
    const bool need_b = (op == Op::kMatmul || op == Op::kAddRow || op == Op::kAdd || op == Op::kSub ||
                         op == Op::kMul) && nodes_[ib].requires_grad;

    switch (op) {
      case Op::kLeaf:
        break;
      case Op::kMatmul:
        if (need_a) add_a_bt(g, nodes_[ib].value, grad_buffer(ia));
        if (need_b) add_at_b(nodes_[ia].value, g, grad_buffer(ib));
        break;
      case Op::kAddRow:
        if (need_a) accumulate(ia, g);
        if (need_b) {
          auto& gb = grad_buffer(ib);
          for (std::size_t i = 0; i < g.rows; ++i) {
            for (std::size_t j = 0; j < g.cols; ++j) gb.data[j] += g(i, j);
          }
        }
        break;
      case Op::kAdd:
        if (need_a) accumulate(ia, g);
        if (need_b) accumulate(ib, g);
        break;
      case Op::kSub:
        if (need_a) accumulate(ia, g);
        if (need_b) {
          auto& gb = grad_buffer(ib);
          for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] -= g.data[i];
        }
        break;
      case Op::kMul:
        if (need_a) {
          auto& ga = grad_buffer(ia);
          const auto& bv = nodes_[ib].value;
          for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * bv.data[i];
        }
        if (need_b) {
          auto& gb = grad_buffer(ib);
          const auto& av = nodes_[ia].value;
          for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i] * av.data[i];
        }
        break;
      case Op::kScale: {
        auto& ga = grad_buffer(ia);
        const double f = nodes_[idx].attr;
        for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += f * g.data[i];
        break;
      }
      case Op::kLeakyRelu: {
        auto& ga = grad_buffer(ia);
        const auto& in = nodes_[ia].value;
        const double slope = nodes_[idx].attr;
        for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * (in.data[i] > 0.0 ? 1.0 : slope);
        break;
      }
      case Op::kSoftmaxRows: {
        auto& ga = grad_buffer(ia);
        for (std::size_t i = 0; i < out.rows; ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < out.cols; ++j) dot += g(i, j) * out(i, j);
          for (std::size_t j = 0; j < out.cols; ++j) ga(i, j) += out(i, j) * (g(i, j) - dot);
        }
        break;
      }
      case Op::kLog: {
        auto& ga = grad_buffer(ia);
        const auto& in = nodes_[ia].value;
        const double eps = nodes_[idx].attr;
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (in.data[i] > eps) ga.data[i] += g.data[i] / in.data[i];
        }
        break;
      }
      case Op::kSquare: {
        auto& ga = grad_buffer(ia);
        const auto& in = nodes_[ia].value;
        for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += 2.0 * in.data[i] * g.data[i];
        break;
      }
      case Op::kSqrt: {
        auto& ga = grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (out.data[i] > 0.0) ga.data[i] += 0.5 * g.data[i] / out.data[i];
        }
        break;
      }
      case Op::kSum: {
        auto& ga = grad_buffer(ia);
        for (auto& x : ga.data) x += g.data[0];
        break;
      }
      case Op::kSumRows: {
        auto& ga = grad_buffer(ia);
        for (std::size_t i = 0; i < ga.rows; ++i) {
          for (std::size_t j = 0; j < ga.cols; ++j) ga(i, j) += g.data[i];
        }
        break;
      }
      case Op::kSliceRows: {
        auto& ga = grad_buffer(ia);
        const std::size_t offset = nodes_[idx].attr_index * ga.cols;
        for (std::size_t i = 0; i < g.size(); ++i) ga.data[offset + i] += g.data[i];
        break;
      }
      case Op::kOpaque:
        throw UnsupportedPrimitive("no derivative rule for primitive '" + nodes_[idx].name + "'");
    }
  }
}

}  // namespace mma::autodiff
