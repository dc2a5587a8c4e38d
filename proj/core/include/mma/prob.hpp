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
#include <initializer_list>
#include <span>
#include <vector>

namespace mma {

// Categorical distribution over |C| classes.
//
// Construction does not normalize or validate; `is_valid` checks the
// distribution invariant (non-negative, unit sum).
class ProbVector {
 public:
  ProbVector() = default;
  explicit ProbVector(std::vector<double> p) : p_(std::move(p)) {}
  ProbVector(std::initializer_list<double> p) : p_(p) {}

  static ProbVector uniform(std::size_t classes);
  static ProbVector one_hot(std::size_t classes, std::size_t label);

  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  double& operator[](std::size_t i) { return p_[i]; }
  std::span<const double> values() const noexcept { return p_; }
  const std::vector<double>& vector() const noexcept { return p_; }
  auto begin() const noexcept { return p_.begin(); }
  auto end() const noexcept { return p_.end(); }

  std::size_t argmax() const;
  double entropy() const;
  bool is_valid(double tolerance = 1e-6) const;

  friend bool operator==(const ProbVector&, const ProbVector&) = default;

 private:
  std::vector<double> p_;
};

// Elementwise mean of equally sized distributions.
ProbVector mean_of(std::span<const ProbVector> ps);

}  // namespace mma
