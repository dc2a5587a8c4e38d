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

#include "mma/costs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mma/error.hpp"

namespace mma {

namespace detail {
extern const std::string_view kTable6Csv;
extern const std::string_view kTable7Csv;
extern const std::string_view kTable8Csv;
}  // namespace detail

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw FormatError(where + ": not a number: '" + std::string(s) + "'");
  }
  return v;
}

std::size_t parse_count(std::string_view s, const std::string& where) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw FormatError(where + ": not a count: '" + std::string(s) + "'");
  }
  return v;
}

struct Column {
  std::vector<double> totals;
  std::vector<double> accs;
};

Column present_rows(const AccuracyGrid& grid, std::size_t labeled) {
  const auto col = grid.column_of(labeled);
  if (!col) throw PreconditionError("no labeled column " + std::to_string(labeled));
  Column c;
  for (std::size_t r = 0; r < grid.total_counts.size(); ++r) {
    if (const auto& a = grid.acc[r][*col]) {
      c.totals.push_back(static_cast<double>(grid.total_counts[r]));
      c.accs.push_back(*a);
    }
  }
  return c;
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

void AccuracyGrid::validate() const {
  if (labeled_counts.empty() || total_counts.empty()) throw FormatError("grid has no rows or columns");
  for (std::size_t i = 1; i < labeled_counts.size(); ++i) {
    if (labeled_counts[i] <= labeled_counts[i - 1]) throw FormatError("labeled counts must be strictly ascending");
  }
  for (std::size_t i = 1; i < total_counts.size(); ++i) {
    if (total_counts[i] <= total_counts[i - 1]) throw FormatError("total counts must be strictly ascending");
  }
  if (acc.size() != total_counts.size() || stddev.size() != total_counts.size()) {
    throw FormatError("grid row count mismatch");
  }
  for (std::size_t r = 0; r < acc.size(); ++r) {
    if (acc[r].size() != labeled_counts.size() || stddev[r].size() != labeled_counts.size()) {
      throw FormatError("grid row " + std::to_string(total_counts[r]) + " has the wrong number of cells");
    }
    for (std::size_t c = 0; c < labeled_counts.size(); ++c) {
      if (!acc[r][c]) continue;
      const double a = *acc[r][c];
      if (!(a >= 0.0 && a <= 100.0)) {
        throw FormatError("accuracy out of [0, 100] at total " + std::to_string(total_counts[r]));
      }
      if (labeled_counts[c] > total_counts[r]) {
        throw FormatError("labeled count " + std::to_string(labeled_counts[c]) + " exceeds total " +
                          std::to_string(total_counts[r]));
      }
    }
  }
}

std::optional<std::size_t> AccuracyGrid::column_of(std::size_t labeled) const {
  const auto it = std::find(labeled_counts.begin(), labeled_counts.end(), labeled);
  if (it == labeled_counts.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labeled_counts.begin());
}

AccuracyGrid AccuracyGrid::parse_csv(std::string_view text) {
  AccuracyGrid g;
  bool header = true;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto cells = split(line, ',');
    const std::string where = "line " + std::to_string(line_no);
    if (header) {
      for (std::size_t i = 1; i < cells.size(); ++i) g.labeled_counts.push_back(parse_count(cells[i], where));
      header = false;
      continue;
    }
    if (cells.size() != g.labeled_counts.size() + 1) {
      throw FormatError(where + ": expected " + std::to_string(g.labeled_counts.size() + 1) + " cells");
    }
    g.total_counts.push_back(parse_count(cells[0], where));
    auto& acc_row = g.acc.emplace_back();
    auto& std_row = g.stddev.emplace_back();
    for (std::size_t i = 1; i < cells.size(); ++i) {
      auto cell = cells[i];
      if (cell == "-" || cell.empty()) {
        acc_row.emplace_back();
        std_row.emplace_back();
        continue;
      }
      std::size_t sep_len = 2;
      auto pos = cell.find("\xC2\xB1");  // UTF-8 plus-minus sign
      if (pos == std::string_view::npos) pos = cell.find("+-");
      if (pos == std::string_view::npos) {
        acc_row.emplace_back(parse_double(cell, where));
        std_row.emplace_back();
      } else {
        acc_row.emplace_back(parse_double(trim(cell.substr(0, pos)), where));
        std_row.emplace_back(parse_double(trim(cell.substr(pos + sep_len)), where));
      }
    }
  }
  if (header) throw FormatError("grid CSV is empty");
  g.validate();
  return g;
}

AccuracyGrid AccuracyGrid::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open grid file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::string AccuracyGrid::to_csv() const {
  std::ostringstream os;
  os << "total";
  for (const auto l : labeled_counts) os << ',' << l;
  os << '\n';
  for (std::size_t r = 0; r < total_counts.size(); ++r) {
    os << total_counts[r];
    for (std::size_t c = 0; c < labeled_counts.size(); ++c) {
      os << ',';
      if (!acc[r][c]) {
        os << '-';
        continue;
      }
      os << format_number(*acc[r][c]);
      if (stddev[r][c]) os << "\xC2\xB1" << format_number(*stddev[r][c]);
    }
    os << '\n';
  }
  return os.str();
}

RequiredTotal required_total(const AccuracyGrid& grid, std::size_t labeled, double target) {
  const auto col = present_rows(grid, labeled);
  const auto& t = col.totals;
  const auto& a = col.accs;
  if (a.empty()) throw UnreachableTarget("column " + std::to_string(labeled) + " has no measurements");
  const double hi = *std::max_element(a.begin(), a.end());
  const double lo = *std::min_element(a.begin(), a.end());
  if (target > hi) {
    throw UnreachableTarget("target " + format_number(target) + " above the best accuracy " + format_number(hi) +
                            " with " + std::to_string(labeled) + " labels");
  }
  if (target < lo) return {t.front(), true};

  auto interpolate = [&](std::size_t r) {
    if (a[r] == a[r + 1]) return t[r + 1];
    const double lambda = (target - a[r + 1]) / (a[r] - a[r + 1]);
    return lambda * t[r] + (1.0 - lambda) * t[r + 1];
  };
  // Last ascending bracket from small totals; a column that only crosses the
  // target going down falls back to its last descending bracket.
  std::optional<std::size_t> ascending;
  std::optional<std::size_t> any;
  for (std::size_t r = 0; r + 1 < a.size(); ++r) {
    if (a[r] <= target && target <= a[r + 1]) ascending = r;
    if (std::min(a[r], a[r + 1]) <= target && target <= std::max(a[r], a[r + 1])) any = r;
  }
  if (ascending) return {interpolate(*ascending), false};
  if (any) return {interpolate(*any), false};
  // Single measurement equal to the target.
  return {t.front(), false};
}

double cost_ratio(const AccuracyGrid& grid, double target, std::size_t labeled, std::size_t next_labeled) {
  if (next_labeled <= labeled) throw PreconditionError("cost ratio needs next_labeled > labeled");
  const double u = required_total(grid, labeled, target).total - static_cast<double>(labeled);
  const double u_next = required_total(grid, next_labeled, target).total - static_cast<double>(next_labeled);
  return (u - u_next) / static_cast<double>(next_labeled - labeled);
}

CostCurve cost_curve(const AccuracyGrid& grid, double target) {
  CostCurve curve;
  curve.target = target;
  const auto& cols = grid.labeled_counts;
  std::vector<std::optional<RequiredTotal>> req(cols.size());
  std::size_t reachable = 0;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    try {
      req[c] = required_total(grid, cols[c], target);
      ++reachable;
      if (req[c]->below_range) {
        curve.diagnostics.push_back("target " + format_number(target) + " below every accuracy with " +
                                    std::to_string(cols[c]) + " labels; using the smallest total");
      }
    } catch (const UnreachableTarget& e) {
      curve.diagnostics.push_back(e.what());
    }
  }
  if (reachable < 2) {
    throw UnreachableTarget("target " + format_number(target) + " is reached by " + std::to_string(reachable) +
                            " labeled column(s); need at least 2");
  }
  for (std::size_t c = 0; c + 1 < cols.size(); ++c) {
    if (!req[c] || !req[c + 1]) {
      curve.diagnostics.push_back("skipped L=" + std::to_string(cols[c]) + "->" + std::to_string(cols[c + 1]));
      continue;
    }
    const double u = req[c]->total - static_cast<double>(cols[c]);
    const double u_next = req[c + 1]->total - static_cast<double>(cols[c + 1]);
    curve.points.push_back({cols[c], cols[c + 1], (u - u_next) / static_cast<double>(cols[c + 1] - cols[c])});
  }
  return curve;
}

std::string curves_to_csv(std::span<const CostCurve> curves) {
  std::ostringstream os;
  os << "target,labeled,next_labeled,ratio\n";
  for (const auto& curve : curves) {
    for (const auto& p : curve.points) {
      os << format_number(curve.target) << ',' << p.labeled << ',' << p.next_labeled << ',' << format_number(p.ratio)
         << '\n';
    }
  }
  return os.str();
}

std::vector<std::string> fixture_names() { return {"table6", "table7", "table8"}; }

std::string_view fixture_csv(std::string_view name) {
  if (name == "table6") return detail::kTable6Csv;
  if (name == "table7") return detail::kTable7Csv;
  if (name == "table8") return detail::kTable8Csv;
  throw PreconditionError("unknown fixture '" + std::string(name) + "'");
}

std::string fixture_filename(std::string_view name) {
  if (name == "table6") return "table6_cifar10.csv";
  if (name == "table7") return "table7_cifar100.csv";
  if (name == "table8") return "table8_svhn_extra.csv";
  throw PreconditionError("unknown fixture '" + std::string(name) + "'");
}

}  // namespace mma
