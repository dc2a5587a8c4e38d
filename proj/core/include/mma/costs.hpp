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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mma {

// Accuracy (percent) measured at each (total count, labeled count) pair.
// Rows are total counts, columns are labeled counts, both strictly ascending.
struct AccuracyGrid {
  std::vector<std::size_t> labeled_counts;
  std::vector<std::size_t> total_counts;
  std::vector<std::vector<std::optional<double>>> acc;     // [row][col]
  std::vector<std::vector<std::optional<double>>> stddev;  // same shape, optional per cell

  void validate() const;
  std::optional<std::size_t> column_of(std::size_t labeled) const;

  // Header `total,L1,L2,...`; one row per total; cells `mean±std`, `mean`
  // or `-` for absent. `+-` is accepted for `±`.
  static AccuracyGrid parse_csv(std::string_view text);
  static AccuracyGrid load_csv(const std::filesystem::path& path);
  std::string to_csv() const;

  friend bool operator==(const AccuracyGrid&, const AccuracyGrid&) = default;
};

struct RequiredTotal {
  double total = 0.0;
  bool below_range = false;  // target under every measured accuracy; total is the smallest row
};

// Total count needed to reach `target` with `labeled` labels, linearly
// interpolated between the bracketing rows. Within a non-monotone column the
// last bracket scanning from small totals wins. Throws UnreachableTarget when
// the target exceeds every accuracy in the column.
RequiredTotal required_total(const AccuracyGrid& grid, std::size_t labeled, double target);

// Unlabeled examples saved per extra labeled example:
// (U_i - U_next) / (L_next - L_i), with U = required_total - L.
double cost_ratio(const AccuracyGrid& grid, double target, std::size_t labeled, std::size_t next_labeled);

struct CostPoint {
  std::size_t labeled = 0;
  std::size_t next_labeled = 0;
  double ratio = 0.0;
};

struct CostCurve {
  double target = 0.0;
  std::vector<CostPoint> points;
  std::vector<std::string> diagnostics;  // one line per skipped pair or clamped column
};

// One point per consecutive pair of labeled columns that both reach the
// target. Throws UnreachableTarget when fewer than two columns reach it.
CostCurve cost_curve(const AccuracyGrid& grid, double target);

// `target,labeled,next_labeled,ratio` rows for every curve.
std::string curves_to_csv(std::span<const CostCurve> curves);

// Accuracy grids bundled with the library: "table6", "table7", "table8".
std::vector<std::string> fixture_names();
std::string_view fixture_csv(std::string_view name);
std::string fixture_filename(std::string_view name);

}  // namespace mma
