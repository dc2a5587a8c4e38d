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
#include <functional>

#include "mma/autodiff.hpp"
#include "mma/error.hpp"
#include "mma/rng.hpp"
#include "support/oracles.hpp"

namespace mma::autodiff {
namespace {

using Builder = std::function<Var(Tape&, Var)>;

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (auto& v : m.data) v = rng.uniform(lo, hi);
  return m;
}

// Compares the tape gradient of a scalar function of one input matrix
// against central differences.
void check_gradient(const Builder& f, const Matrix& x0, double tol = 1e-6) {
  Tape tape;
  const Var x = tape.variable(x0);
  tape.backward(f(tape, x));
  const Matrix analytic = tape.grad(x);

  const auto eval = [&](const std::vector<double>& values) {
    Tape t;
    Matrix m = x0;
    m.data = values;
    return t.value(f(t, t.constant(m))).data[0];
  };
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const double numeric = oracle::central_difference(eval, x0.data, i, 1e-6);
    EXPECT_NEAR(analytic.data[i], numeric, tol * std::max(1.0, std::abs(numeric))) << "entry " << i;
  }
}

TEST(Autodiff, MatmulAddRowAndSum) {
  Rng rng(1);
  const Matrix w = random_matrix(3, 2, rng);
  const Matrix b = random_matrix(1, 2, rng);
  check_gradient([&](Tape& t, Var x) { return t.sum(t.add_row(t.matmul(x, t.constant(w)), t.constant(b))); },
                 random_matrix(4, 3, rng));
  check_gradient([&](Tape& t, Var x) { return t.sum(t.square(t.matmul(t.constant(b), x))); }, random_matrix(2, 3, rng));
}

TEST(Autodiff, ElementwiseOps) {
  Rng rng(2);
  const Matrix c = random_matrix(3, 3, rng);
  check_gradient([&](Tape& t, Var x) { return t.sum(t.mul(x, t.add(x, t.constant(c)))); }, random_matrix(3, 3, rng));
  check_gradient([&](Tape& t, Var x) { return t.sum(t.scale(t.sub(t.constant(c), x), -2.5)); },
                 random_matrix(3, 3, rng));
  check_gradient([&](Tape& t, Var x) { return t.sum(t.square(t.leaky_relu(x, 0.1))); }, random_matrix(3, 3, rng));
  check_gradient([&](Tape& t, Var x) { return t.sum(t.sqrt(x)); }, random_matrix(2, 2, rng, 0.5, 2.0));
  check_gradient([&](Tape& t, Var x) { return t.sum(t.log(x, 1e-8)); }, random_matrix(2, 2, rng, 0.2, 2.0));
}

TEST(Autodiff, SoftmaxRowsSumRowsAndSlice) {
  Rng rng(3);
  const Matrix target = random_matrix(4, 3, rng, 0.0, 1.0);
  check_gradient([&](Tape& t, Var x) { return t.sum(t.mul(t.constant(target), t.log(t.softmax_rows(x), 1e-8))); },
                 random_matrix(4, 3, rng));
  check_gradient([&](Tape& t, Var x) { return t.sum(t.square(t.sum_rows(t.slice_rows(x, 1, 3)))); },
                 random_matrix(4, 3, rng));
}

TEST(Autodiff, SoftmaxRowsAreDistributions) {
  Rng rng(4);
  Tape t;
  const auto p = t.value(t.softmax_rows(t.constant(random_matrix(5, 4, rng, -50.0, 50.0))));
  for (std::size_t r = 0; r < 5; ++r) {
    double s = 0.0;
    for (const double v : p.row(r)) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Autodiff, LogClampHasZeroDerivative) {
  Tape t;
  const Var x = t.variable(Matrix(1, 2, 0.0));
  t.backward(t.sum(t.log(x, 1e-8)));
  EXPECT_EQ(t.grad(x).data, (std::vector<double>{0.0, 0.0}));
  EXPECT_NEAR(t.value(t.log(x, 1e-8)).data[0], std::log(1e-8), 1e-12);
}

TEST(Autodiff, GradientAccumulatesOverSharedUse) {
  Tape t;
  const Var x = t.variable(Matrix::scalar(3.0));
  t.backward(t.add(t.mul(x, x), x));  // d/dx (x^2 + x) = 2x + 1
  EXPECT_DOUBLE_EQ(t.grad(x).data[0], 7.0);
}

TEST(Autodiff, OpaquePrimitiveRefusesBackward) {
  Tape t;
  const Var x = t.variable(Matrix::scalar(2.0));
  const Var y = t.opaque("clip", x, [](const Matrix& m) { return m; });
  EXPECT_DOUBLE_EQ(t.value(y).data[0], 2.0);
  try {
    t.backward(t.sum(y));
    FAIL() << "expected UnsupportedPrimitive";
  } catch (const UnsupportedPrimitive& e) {
    EXPECT_NE(std::string(e.what()).find("clip"), std::string::npos);
  }
}

TEST(Autodiff, ShapeChecks) {
  Tape t;
  const Var a = t.variable(Matrix(2, 3));
  const Var b = t.variable(Matrix(2, 3));
  EXPECT_THROW(t.matmul(a, b), PreconditionError);
  EXPECT_THROW(t.slice_rows(a, 1, 5), PreconditionError);
  EXPECT_THROW(t.backward(a), PreconditionError);
}

}  // namespace
}  // namespace mma::autodiff
