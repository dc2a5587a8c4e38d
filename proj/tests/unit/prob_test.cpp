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

#include "mma/prob.hpp"

namespace mma {
namespace {

TEST(ProbVector, Constructors) {
  const auto u = ProbVector::uniform(4);
  for (const double v : u) EXPECT_DOUBLE_EQ(v, 0.25);
  const auto h = ProbVector::one_hot(3, 1);
  EXPECT_EQ(h, (ProbVector{0.0, 1.0, 0.0}));
  EXPECT_EQ(h.argmax(), 1u);
}

TEST(ProbVector, Validity) {
  EXPECT_TRUE((ProbVector{0.2, 0.8}).is_valid());
  EXPECT_FALSE((ProbVector{0.2, 0.7}).is_valid());
  EXPECT_FALSE((ProbVector{-0.1, 1.1}).is_valid());
  EXPECT_FALSE((ProbVector{}).is_valid());
}

TEST(ProbVector, ArgmaxTiesGoToLowerIndex) { EXPECT_EQ((ProbVector{0.4, 0.4, 0.2}).argmax(), 0u); }

TEST(ProbVector, Entropy) {
  EXPECT_NEAR(ProbVector::uniform(4).entropy(), std::log(4.0), 1e-12);
  EXPECT_DOUBLE_EQ(ProbVector::one_hot(4, 2).entropy(), 0.0);
}

TEST(ProbVector, MeanOf) {
  const std::vector<ProbVector> ps{{0.6, 0.4}, {0.8, 0.2}};
  const auto m = mean_of(ps);
  EXPECT_NEAR(m[0], 0.7, 1e-15);
  EXPECT_NEAR(m[1], 0.3, 1e-15);
}

}  // namespace
}  // namespace mma
