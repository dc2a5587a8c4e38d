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

#include "mma/prob.hpp"

#include <algorithm>
#include <cmath>

#include "mma/error.hpp"

namespace mma {

ProbVector ProbVector::uniform(std::size_t classes) {
  if (classes == 0) throw PreconditionError("uniform distribution needs at least one class");
  return ProbVector(std::vector<double>(classes, 1.0 / static_cast<double>(classes)));
}

ProbVector ProbVector::one_hot(std::size_t classes, std::size_t label) {
  if (label >= classes) throw PreconditionError("one-hot label out of range");
  std::vector<double> p(classes, 0.0);
  p[label] = 1.0;
  return ProbVector(std::move(p));
}

std::size_t ProbVector::argmax() const {
  if (p_.empty()) throw PreconditionError("argmax of empty distribution");
  return static_cast<std::size_t>(std::max_element(p_.begin(), p_.end()) - p_.begin());
}

double ProbVector::entropy() const {
  double h = 0.0;
  for (const double x : p_) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

bool ProbVector::is_valid(double tolerance) const {
  if (p_.empty()) return false;
  double sum = 0.0;
  for (const double x : p_) {
    if (!std::isfinite(x) || x < 0.0) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tolerance;
}

ProbVector mean_of(std::span<const ProbVector> ps) {
  if (ps.empty()) throw PreconditionError("mean of zero distributions");
  std::vector<double> acc(ps.front().size(), 0.0);
  for (const auto& p : ps) {
    if (p.size() != acc.size()) throw PreconditionError("distributions differ in class count");
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += p[c];
  }
  const double inv = 1.0 / static_cast<double>(ps.size());
  for (auto& x : acc) x *= inv;
  return ProbVector(std::move(acc));
}

}  // namespace mma
