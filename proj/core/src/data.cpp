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

#include "mma/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "mma/apportion.hpp"
#include "mma/binary_io.hpp"
#include "mma/error.hpp"

namespace mma {

namespace {
__extension__ using Wide = unsigned __int128;
}  // namespace

namespace {

constexpr std::string_view kDataMagic = "MMADATA1";
constexpr std::uint32_t kDataVersion = 1;

double round_to_f32(double x) { return static_cast<double>(static_cast<float>(x)); }

// Lower-triangular factor of a row-major SPD matrix; empty on failure.
std::vector<double> cholesky(const std::vector<double>& a, std::size_t n) {
  std::vector<double> l(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
      if (i == j) {
        if (!(s > 0.0)) return {};
        l[i * n + i] = std::sqrt(s);
      } else {
        l[i * n + j] = s / l[j * n + j];
      }
    }
  }
  return l;
}

void insert_sorted(std::vector<std::size_t>& v, std::size_t id) {
  v.insert(std::lower_bound(v.begin(), v.end(), id), id);
}

}  // namespace

Dataset::Dataset(std::size_t dims, std::size_t classes, ImageShape shape)
    : dims_(dims), classes_(classes), shape_(shape) {
  if (dims == 0) throw PreconditionError("dataset needs at least one feature dimension");
  if (classes == 0 || classes > std::numeric_limits<std::uint16_t>::max()) {
    throw PreconditionError("class count must be in [1, 65535]");
  }
  if (shape.is_image() && shape.size() != dims) {
    throw PreconditionError("image layout does not match feature dimensionality");
  }
}

void Dataset::add(std::span<const double> features, std::size_t label) {
  if (features.size() != dims_) throw PreconditionError("feature dimensionality mismatch");
  if (label >= classes_) throw PreconditionError("label out of range");
  for (const double x : features) features_.push_back(round_to_f32(x));
  labels_.push_back(static_cast<std::uint16_t>(label));
}

std::span<const double> Dataset::features(std::size_t id) const {
  if (id >= size()) throw PreconditionError("unknown example id " + std::to_string(id));
  return std::span<const double>(features_).subspan(id * dims_, dims_);
}

std::size_t Dataset::label(std::size_t id) const {
  if (id >= size()) throw PreconditionError("unknown example id " + std::to_string(id));
  return labels_[id];
}

Example Dataset::example(std::size_t id) const {
  const auto f = features(id);
  return Example{id, std::vector<double>(f.begin(), f.end()), label(id)};
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(classes_, 0);
  for (const auto l : labels_) ++counts[l];
  return counts;
}

void Dataset::normalize_to_unit_range() {
  if (size() == 0) return;
  for (std::size_t d = 0; d < dims_; ++d) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < size(); ++i) {
      lo = std::min(lo, features_[i * dims_ + d]);
      hi = std::max(hi, features_[i * dims_ + d]);
    }
    const double range = hi - lo;
    for (std::size_t i = 0; i < size(); ++i) {
      auto& x = features_[i * dims_ + d];
      x = range > 0.0 ? round_to_f32(std::clamp(2.0 * (x - lo) / range - 1.0, -1.0, 1.0)) : 0.0;
    }
  }
}

std::vector<std::uint8_t> Dataset::to_bytes() const {
  ByteWriter w;
  w.magic(kDataMagic);
  w.u32(kDataVersion);
  w.u64(size());
  w.u64(dims_);
  w.u32(static_cast<std::uint32_t>(classes_));
  w.u32(shape_.height);
  w.u32(shape_.width);
  w.u32(shape_.channels);
  for (const double x : features_) w.f32(static_cast<float>(x));
  for (const auto l : labels_) w.u16(l);
  return w.bytes();
}

void Dataset::save(const std::filesystem::path& path) const { write_file_bytes(path, to_bytes()); }

Dataset Dataset::from_bytes(std::vector<std::uint8_t> bytes) {
  ByteReader r(std::move(bytes));
  r.expect_magic(kDataMagic);
  const auto version = r.u32();
  if (version != kDataVersion) throw FormatError("unsupported dataset version " + std::to_string(version));
  const auto count = r.u64();
  const auto dims = r.u64();
  const auto classes = r.u32();
  ImageShape shape{};
  shape.height = r.u32();
  shape.width = r.u32();
  shape.channels = r.u32();
  if (dims == 0 || classes == 0) throw FormatError("dataset header has zero dims or classes");
  const auto expected = static_cast<Wide>(count) * (static_cast<Wide>(dims) * 4 + 2);
  if (expected != r.remaining()) {
    throw FormatError("dataset payload size does not match header");
  }
  Dataset ds(dims, classes, shape);
  ds.features_.reserve(count * dims);
  for (std::uint64_t i = 0; i < count * dims; ++i) ds.features_.push_back(static_cast<double>(r.f32()));
  ds.labels_.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto l = r.u16();
    if (l >= classes) throw FormatError("label out of range in dataset file");
    ds.labels_.push_back(l);
  }
  return ds;
}

Dataset Dataset::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error("dataset file not found: " + path.string());
  try {
    return from_bytes(read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Dataset Dataset::import_csv(const std::filesystem::path& path, bool normalize) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open CSV dataset: " + path.string());

  std::map<std::size_t, std::pair<std::size_t, std::vector<double>>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dims = 0;
  std::size_t max_label = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    const auto where = path.string() + ":" + std::to_string(line_no);
    std::vector<double> values;
    try {
      for (const auto& c : cells) {
        std::size_t used = 0;
        values.push_back(std::stod(c, &used));
        if (used != c.size() && c.find_first_not_of(" \t", used) != std::string::npos) {
          throw std::invalid_argument(c);
        }
      }
    } catch (const std::exception&) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw FormatError(where + ": non-numeric cell");
    }
    if (values.size() < 3) throw FormatError(where + ": expected id,label,f0,...");
    if (values[0] < 0 || values[1] < 0 || values[0] != std::floor(values[0]) || values[1] != std::floor(values[1])) {
      throw FormatError(where + ": id and label must be non-negative integers");
    }
    const auto id = static_cast<std::size_t>(values[0]);
    const auto label = static_cast<std::size_t>(values[1]);
    std::vector<double> f(values.begin() + 2, values.end());
    if (dims == 0) dims = f.size();
    if (f.size() != dims) throw FormatError(where + ": inconsistent feature count");
    if (!rows.emplace(id, std::make_pair(label, std::move(f))).second) {
      throw FormatError(where + ": duplicate id " + std::to_string(id));
    }
    max_label = std::max(max_label, label);
  }
  if (rows.empty()) throw FormatError(path.string() + ": no rows");
  if (rows.rbegin()->first != rows.size() - 1) throw FormatError(path.string() + ": ids must be 0..n-1");

  Dataset ds(dims, max_label + 1);
  for (const auto& [id, row] : rows) ds.add(row.second, row.first);
  if (normalize) ds.normalize_to_unit_range();
  return ds;
}

Pool::Pool(const Dataset& dataset) : dataset_(&dataset) {
  unlabeled_.resize(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) unlabeled_[i] = i;
}

bool Pool::is_labeled(std::size_t id) const { return std::binary_search(labeled_.begin(), labeled_.end(), id); }

std::size_t Pool::reveal_label(std::size_t id) {
  if (id >= dataset_->size()) throw PreconditionError("reveal of unknown id " + std::to_string(id));
  const auto it = std::lower_bound(unlabeled_.begin(), unlabeled_.end(), id);
  if (it == unlabeled_.end() || *it != id) {
    throw PreconditionError("id " + std::to_string(id) + " is already labeled");
  }
  unlabeled_.erase(it);
  insert_sorted(labeled_, id);
  return dataset_->label(id);
}

std::size_t Pool::labeled_class(std::size_t id) const {
  if (!is_labeled(id)) throw PreconditionError("id " + std::to_string(id) + " has not been revealed");
  return dataset_->label(id);
}

Pool Pool::with_labeled(const Dataset& dataset, std::span<const std::size_t> labeled_ids) {
  Pool pool(dataset);
  for (const auto id : labeled_ids) pool.reveal_label(id);
  return pool;
}

std::vector<std::size_t> balanced_allocation(std::span<const std::size_t> class_counts, std::size_t m0) {
  if (m0 < class_counts.size()) {
    throw PreconditionError("balanced initial sample needs m0 >= number of classes");
  }
  return largest_remainder(class_counts, m0);
}

Pool initial_sample(Pool pool, std::size_t m0, bool balanced, std::uint64_t seed) {
  const auto& ds = pool.dataset();
  if (m0 > ds.size()) throw PreconditionError("m0 exceeds dataset size");
  if (m0 > pool.unlabeled().size()) throw PreconditionError("m0 exceeds the unlabeled pool");
  Rng rng = Rng::stream(seed, "initial-sample");

  std::vector<std::size_t> chosen;
  if (!balanced) {
    const auto candidates = pool.unlabeled();
    for (const auto k : rng.sample_without_replacement(candidates.size(), m0)) chosen.push_back(candidates[k]);
  } else {
    const auto quota = balanced_allocation(ds.class_counts(), m0);
    std::vector<std::vector<std::size_t>> by_class(ds.classes());
    for (const auto id : pool.unlabeled()) by_class[ds.label(id)].push_back(id);
    for (std::size_t c = 0; c < ds.classes(); ++c) {
      if (quota[c] > by_class[c].size()) {
        throw PreconditionError("class " + std::to_string(c) + " has too few unlabeled examples");
      }
      for (const auto k : rng.sample_without_replacement(by_class[c].size(), quota[c])) {
        chosen.push_back(by_class[c][k]);
      }
    }
  }
  for (const auto id : chosen) pool.reveal_label(id);
  return pool;
}

std::string to_string(AugmentKind kind) {
  switch (kind) {
    case AugmentKind::kIdentity: return "identity";
    case AugmentKind::kShift: return "shift";
    case AugmentKind::kShiftMirror: return "shift+mirror";
    case AugmentKind::kJitter: return "jitter";
  }
  return "identity";
}

AugmentKind parse_augment_kind(const std::string& name) {
  if (name == "identity") return AugmentKind::kIdentity;
  if (name == "shift") return AugmentKind::kShift;
  if (name == "shift+mirror" || name == "shift_mirror") return AugmentKind::kShiftMirror;
  if (name == "jitter") return AugmentKind::kJitter;
  throw ConfigError("unknown augmentation kind '" + name + "'", "augmentation.kind");
}

std::vector<double> shift_image(std::span<const double> x, const ImageShape& shape, int dx, int dy) {
  if (!shape.is_image() || shape.size() != x.size()) {
    throw ConfigError("shift augmentation requires image-shaped features", "augmentation.kind");
  }
  const int h = static_cast<int>(shape.height);
  const int w = static_cast<int>(shape.width);
  const std::size_t c = shape.channels;
  std::vector<double> out(x.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    const int sy = y - dy;
    if (sy < 0 || sy >= h) continue;
    for (int col = 0; col < w; ++col) {
      const int sx = col - dx;
      if (sx < 0 || sx >= w) continue;
      for (std::size_t ch = 0; ch < c; ++ch) {
        out[(static_cast<std::size_t>(y) * w + col) * c + ch] = x[(static_cast<std::size_t>(sy) * w + sx) * c + ch];
      }
    }
  }
  return out;
}

std::vector<double> mirror_image(std::span<const double> x, const ImageShape& shape) {
  if (!shape.is_image() || shape.size() != x.size()) {
    throw ConfigError("mirror augmentation requires image-shaped features", "augmentation.kind");
  }
  const std::size_t w = shape.width;
  const std::size_t c = shape.channels;
  std::vector<double> out(x.size());
  for (std::size_t y = 0; y < shape.height; ++y) {
    for (std::size_t col = 0; col < w; ++col) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        out[(y * w + col) * c + ch] = x[(y * w + (w - 1 - col)) * c + ch];
      }
    }
  }
  return out;
}

std::vector<double> augment(std::span<const double> x, const ImageShape& shape,
                            const AugmentationPolicy& policy, Rng& draw) {
  switch (policy.kind) {
    case AugmentKind::kIdentity:
      return {x.begin(), x.end()};
    case AugmentKind::kJitter: {
      if (policy.jitter_sigma < 0.0) throw ConfigError("jitter_sigma must be >= 0", "augmentation.jitter_sigma");
      std::vector<double> out(x.begin(), x.end());
      if (policy.jitter_sigma > 0.0) {
        for (auto& v : out) v += policy.jitter_sigma * draw.normal();
      }
      return out;
    }
    case AugmentKind::kShift:
    case AugmentKind::kShiftMirror: {
      if (!shape.is_image() || shape.size() != x.size()) {
        throw ConfigError("shift augmentation requires image-shaped features", "augmentation.kind");
      }
      const bool mirror = policy.kind == AugmentKind::kShiftMirror && draw.bernoulli(0.5);
      const int dx = static_cast<int>(draw.integer(-policy.shift_max, policy.shift_max));
      const int dy = static_cast<int>(draw.integer(-policy.shift_max, policy.shift_max));
      if (mirror) {
        const auto flipped = mirror_image(x, shape);
        return shift_image(flipped, shape, dx, dy);
      }
      return shift_image(x, shape, dx, dy);
    }
  }
  return {x.begin(), x.end()};
}

SyntheticData make_synthetic_split(const SyntheticSpec& spec) {
  if (spec.classes < 2) throw ConfigError("need at least 2 classes", "classes");
  if (spec.dims < 2) throw ConfigError("need at least 2 dimensions", "dims");
  if (spec.means.size() != spec.classes) throw ConfigError("need one mean per class", "means");
  if (spec.image.is_image() && spec.image.size() != spec.dims) {
    throw ConfigError("image layout does not match dims", "image");
  }
  std::vector<std::vector<double>> factors;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    const auto field = "means[" + std::to_string(c) + "]";
    if (spec.means[c].size() != spec.dims) throw ConfigError("mean has wrong dimensionality", field);
    std::vector<double> cov;
    if (spec.covariances.empty()) {
      cov.assign(spec.dims * spec.dims, 0.0);
      for (std::size_t d = 0; d < spec.dims; ++d) cov[d * spec.dims + d] = 1.0;
    } else {
      if (spec.covariances.size() != spec.classes) throw ConfigError("need one covariance per class", "covariances");
      cov = spec.covariances[c];
    }
    const auto cfield = "covariances[" + std::to_string(c) + "]";
    if (cov.size() != spec.dims * spec.dims) throw ConfigError("covariance must be dims x dims", cfield);
    for (std::size_t i = 0; i < spec.dims; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (std::abs(cov[i * spec.dims + j] - cov[j * spec.dims + i]) > 1e-12) {
          throw ConfigError("covariance is not symmetric", cfield);
        }
      }
    }
    auto l = cholesky(cov, spec.dims);
    if (l.empty()) throw ConfigError("covariance is not positive definite", cfield);
    factors.push_back(std::move(l));
  }

  Rng rng = Rng::stream(spec.seed, "synthetic");
  const std::size_t n = spec.dims;
  Dataset all(n, spec.classes, spec.image);
  std::vector<double> z(n);
  std::vector<double> x(n);
  auto draw_rows = [&](std::size_t per_class) {
    for (std::size_t c = 0; c < spec.classes; ++c) {
      for (std::size_t i = 0; i < per_class; ++i) {
        for (auto& v : z) v = rng.normal();
        for (std::size_t r = 0; r < n; ++r) {
          double acc = spec.means[c][r];
          for (std::size_t k = 0; k <= r; ++k) acc += factors[c][r * n + k] * z[k];
          x[r] = acc;
        }
        all.add(x, c);
      }
    }
  };
  draw_rows(spec.samples_per_class);
  draw_rows(spec.test_per_class);
  all.normalize_to_unit_range();

  SyntheticData out{Dataset(n, spec.classes, spec.image), Dataset(n, spec.classes, spec.image)};
  const std::size_t train_rows = spec.classes * spec.samples_per_class;
  for (std::size_t i = 0; i < all.size(); ++i) {
    (i < train_rows ? out.train : out.test).add(all.features(i), all.label(i));
  }
  return out;
}

Dataset make_synthetic(const SyntheticSpec& spec) { return make_synthetic_split(spec).train; }

}  // namespace mma
