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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mma/rng.hpp"

namespace mma {

// Channel-last (HWC) layout of image-shaped feature vectors; all zero when
// features are not images.
struct ImageShape {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;

  bool is_image() const noexcept { return height > 0 && width > 0 && channels > 0; }
  std::size_t size() const noexcept { return std::size_t{height} * width * channels; }
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

struct Example {
  std::size_t id = 0;
  std::vector<double> features;
  std::size_t true_label = 0;
};

// Feature rows with ground-truth labels. Example ids are row indices.
// Features are stored as doubles holding f32-representable values, so the
// binary file format round-trips exactly.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t dims, std::size_t classes, ImageShape shape = {});

  void add(std::span<const double> features, std::size_t label);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dims() const noexcept { return dims_; }
  std::size_t classes() const noexcept { return classes_; }
  const ImageShape& image_shape() const noexcept { return shape_; }

  std::span<const double> features(std::size_t id) const;
  std::size_t label(std::size_t id) const;
  Example example(std::size_t id) const;
  std::vector<std::size_t> class_counts() const;

  // Per-dimension min-max scaling of every feature into [-1, 1]. Constant
  // dimensions map to 0.
  void normalize_to_unit_range();

  // MMADATA1 binary container.
  void save(const std::filesystem::path& path) const;
  std::vector<std::uint8_t> to_bytes() const;
  static Dataset load(const std::filesystem::path& path);
  static Dataset from_bytes(std::vector<std::uint8_t> bytes);

  // Rows of `id,label,f0,f1,...`; an optional non-numeric header line is
  // skipped. Ids must be exactly 0..n-1 in any order.
  static Dataset import_csv(const std::filesystem::path& path, bool normalize = true);

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t dims_ = 0;
  std::size_t classes_ = 0;
  ImageShape shape_{};
  std::vector<double> features_;
  std::vector<std::uint16_t> labels_;
};

// Labeled/unlabeled partition of a dataset with the labeling oracle.
// Both id lists are kept sorted; the labeled set only ever grows.
class Pool {
 public:
  explicit Pool(const Dataset& dataset);

  const Dataset& dataset() const noexcept { return *dataset_; }
  const std::vector<std::size_t>& labeled() const noexcept { return labeled_; }
  const std::vector<std::size_t>& unlabeled() const noexcept { return unlabeled_; }
  bool is_labeled(std::size_t id) const;

  // Moves `id` from U to L and returns its true label.
  std::size_t reveal_label(std::size_t id);
  // Label of an already revealed example.
  std::size_t labeled_class(std::size_t id) const;

  // Rebuilds a pool whose labeled set is exactly `labeled_ids`.
  static Pool with_labeled(const Dataset& dataset, std::span<const std::size_t> labeled_ids);

 private:
  const Dataset* dataset_;
  std::vector<std::size_t> labeled_;
  std::vector<std::size_t> unlabeled_;
};

// Per-class initial counts: largest remainder of class frequencies.
std::vector<std::size_t> balanced_allocation(std::span<const std::size_t> class_counts, std::size_t m0);

// Reveals m0 examples drawn from the pool's unlabeled set.
Pool initial_sample(Pool pool, std::size_t m0, bool balanced, std::uint64_t seed);

enum class AugmentKind { kIdentity, kShift, kShiftMirror, kJitter };

struct AugmentationPolicy {
  AugmentKind kind = AugmentKind::kIdentity;
  int shift_max = 4;
  double jitter_sigma = 0.0;
  std::string rng_stream = "augment";
};

std::string to_string(AugmentKind kind);
AugmentKind parse_augment_kind(const std::string& name);

// Shift content by (dx, dy) pixels; vacated pixels are zero. Positive dx
// moves content right, positive dy moves it down.
std::vector<double> shift_image(std::span<const double> x, const ImageShape& shape, int dx, int dy);
std::vector<double> mirror_image(std::span<const double> x, const ImageShape& shape);

// One stochastic augmentation of `x`; deterministic given the state of `draw`.
std::vector<double> augment(std::span<const double> x, const ImageShape& shape,
                            const AugmentationPolicy& policy, Rng& draw);

struct SyntheticSpec {
  std::size_t classes = 2;
  std::size_t samples_per_class = 100;
  std::size_t dims = 2;
  std::vector<std::vector<double>> means;        // classes x dims
  std::vector<std::vector<double>> covariances;  // classes x (dims*dims), row-major
  std::uint64_t seed = 0;
  std::size_t test_per_class = 0;
  ImageShape image{};
};

struct SyntheticData {
  Dataset train;
  Dataset test;
};

// Gaussian-mixture dataset. Training rows are drawn first, then test rows,
// and both are normalized together so they share one feature scale.
SyntheticData make_synthetic_split(const SyntheticSpec& spec);
Dataset make_synthetic(const SyntheticSpec& spec);

}  // namespace mma
