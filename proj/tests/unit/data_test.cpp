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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "mma/data.hpp"
#include "mma/error.hpp"

namespace mma {
namespace {

SyntheticSpec two_blobs(std::uint64_t seed = 7) {
  SyntheticSpec s;
  s.classes = 2;
  s.samples_per_class = 100;
  s.dims = 2;
  s.means = {{-1.0, 0.0}, {1.0, 0.0}};
  s.seed = seed;
  return s;
}

void expect_partition(const Pool& pool) {
  std::set<std::size_t> all(pool.labeled().begin(), pool.labeled().end());
  for (const auto id : pool.unlabeled()) EXPECT_TRUE(all.insert(id).second) << "id " << id << " in both sets";
  EXPECT_EQ(all.size(), pool.dataset().size());
  EXPECT_TRUE(std::is_sorted(pool.labeled().begin(), pool.labeled().end()));
  EXPECT_TRUE(std::is_sorted(pool.unlabeled().begin(), pool.unlabeled().end()));
}

TEST(Synthetic, CountsPerClass) {
  const auto ds = make_synthetic(two_blobs());
  EXPECT_EQ(ds.size(), 200u);
  EXPECT_EQ(ds.class_counts(), (std::vector<std::size_t>{100, 100}));
}

TEST(Synthetic, SameSeedSameBytes) {
  EXPECT_EQ(make_synthetic(two_blobs()).to_bytes(), make_synthetic(two_blobs()).to_bytes());
  EXPECT_NE(make_synthetic(two_blobs(7)).to_bytes(), make_synthetic(two_blobs(8)).to_bytes());
}

TEST(Synthetic, FeaturesNormalizedToUnitRange) {
  const auto ds = make_synthetic(two_blobs());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (const double v : ds.features(i)) {
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Synthetic, CoincidentMeansLimitBayesAccuracy) {
  SyntheticSpec s;
  s.classes = 4;
  s.samples_per_class = 50;
  s.dims = 2;
  s.means = {{0.0, 0.0}, {0.0, 0.0}, {5.0, 0.0}, {0.0, 5.0}};
  s.seed = 3;
  const auto ds = make_synthetic(s);
  // Nearest class mean (computed from the data); classes 0 and 1 cannot both be right.
  std::vector<std::vector<double>> mean(4, std::vector<double>(2, 0.0));
  const auto counts = ds.class_counts();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t d = 0; d < 2; ++d) mean[ds.label(i)][d] += ds.features(i)[d] / static_cast<double>(counts[ds.label(i)]);
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t c = 0; c < 4; ++c) {
      const double dx = ds.features(i)[0] - mean[c][0];
      const double dy = ds.features(i)[1] - mean[c][1];
      if (dx * dx + dy * dy < best_d) {
        best_d = dx * dx + dy * dy;
        best = c;
      }
    }
    correct += best == ds.label(i);
  }
  EXPECT_LT(static_cast<double>(correct) / static_cast<double>(ds.size()), 1.0);
}

TEST(Synthetic, RejectsNonPositiveDefiniteCovariance) {
  auto s = two_blobs();
  s.covariances = {{1.0, 0.0, 0.0, 1.0}, {1.0, 2.0, 2.0, 1.0}};
  try {
    make_synthetic(s);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "covariances[1]");
  }
}

TEST(Synthetic, SplitKeepsTrainAndTestSeparate) {
  auto s = two_blobs();
  s.test_per_class = 30;
  const auto split = make_synthetic_split(s);
  EXPECT_EQ(split.train.size(), 200u);
  EXPECT_EQ(split.test.size(), 60u);
  EXPECT_EQ(split.test.class_counts(), (std::vector<std::size_t>{30, 30}));
}

TEST(InitialSample, UnbalancedCounts) {
  SyntheticSpec s = two_blobs();
  s.samples_per_class = 500;
  const auto ds = make_synthetic(s);
  const auto pool = initial_sample(Pool(ds), 250, false, 1);
  EXPECT_EQ(pool.labeled().size(), 250u);
  EXPECT_EQ(pool.unlabeled().size(), 750u);
  expect_partition(pool);
  EXPECT_EQ(initial_sample(Pool(ds), 250, false, 1).labeled(), pool.labeled());
}

TEST(InitialSample, BalancedAllocationByLargestRemainder) {
  const std::vector<std::size_t> freq{50, 30, 20};
  EXPECT_EQ(balanced_allocation(freq, 10), (std::vector<std::size_t>{5, 3, 2}));

  Dataset ds(1, 3);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < freq[c]; ++i) ds.add(std::vector<double>{static_cast<double>(i)}, c);
  }
  const auto pool = initial_sample(Pool(ds), 10, true, 4);
  std::vector<std::size_t> got(3, 0);
  for (const auto id : pool.labeled()) ++got[ds.label(id)];
  EXPECT_EQ(got, (std::vector<std::size_t>{5, 3, 2}));
  EXPECT_THROW(initial_sample(Pool(ds), 2, true, 4), PreconditionError);
}

TEST(InitialSample, BalancedAllocationAlwaysSumsToM0) {
  Rng r(11);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::size_t> counts(2 + r.below(8));
    for (auto& c : counts) c = 1 + r.below(200);
    const auto m0 = counts.size() + r.below(100);
    const auto alloc = balanced_allocation(counts, m0);
    std::size_t sum = 0;
    for (const auto a : alloc) sum += a;
    EXPECT_EQ(sum, m0);
  }
}

TEST(InitialSample, WholeDatasetAndTooLarge) {
  const auto ds = make_synthetic(two_blobs());
  const auto pool = initial_sample(Pool(ds), ds.size(), false, 0);
  EXPECT_TRUE(pool.unlabeled().empty());
  EXPECT_THROW(initial_sample(Pool(ds), ds.size() + 1, false, 0), PreconditionError);
}

TEST(Pool, RevealMovesOneId) {
  const auto ds = make_synthetic(two_blobs());
  Pool pool(ds);
  const auto before_u = pool.unlabeled().size();
  EXPECT_EQ(pool.reveal_label(5), ds.label(5));
  EXPECT_EQ(pool.labeled().size(), 1u);
  EXPECT_EQ(pool.unlabeled().size(), before_u - 1);
  EXPECT_EQ(pool.labeled_class(5), ds.label(5));
  EXPECT_THROW(pool.reveal_label(5), PreconditionError);
  EXPECT_THROW(pool.reveal_label(ds.size()), PreconditionError);
  EXPECT_THROW(pool.labeled_class(6), PreconditionError);
  expect_partition(pool);
}

TEST(Pool, RevealEverything) {
  const auto ds = make_synthetic(two_blobs());
  Pool pool = initial_sample(Pool(ds), 20, false, 2);
  const auto initial_u = pool.unlabeled().size();
  std::size_t reveals = 0;
  Rng r(3);
  while (!pool.unlabeled().empty()) {
    const auto& u = pool.unlabeled();
    pool.reveal_label(u[r.below(u.size())]);
    ++reveals;
    expect_partition(pool);
  }
  EXPECT_EQ(reveals, initial_u);
  EXPECT_EQ(pool.labeled().size(), ds.size());
}

TEST(Pool, WithLabeledRebuilds) {
  const auto ds = make_synthetic(two_blobs());
  const std::vector<std::size_t> ids{9, 3, 150};
  const auto pool = Pool::with_labeled(ds, ids);
  EXPECT_EQ(pool.labeled(), (std::vector<std::size_t>{3, 9, 150}));
  expect_partition(pool);
}

TEST(Augment, IdentityAndZeroJitterAreExact) {
  const std::vector<double> x{0.1, -0.3, 0.7};
  Rng r(1);
  AugmentationPolicy id;
  EXPECT_EQ(augment(x, {}, id, r), x);
  AugmentationPolicy jitter{AugmentKind::kJitter, 4, 0.0};
  EXPECT_EQ(augment(x, {}, jitter, r), x);
  jitter.jitter_sigma = 0.1;
  const auto y = augment(x, {}, jitter, r);
  EXPECT_EQ(y.size(), x.size());
  EXPECT_NE(y, x);
}

TEST(Augment, ShiftFourByFourRight) {
  const ImageShape shape{4, 4, 1};
  std::vector<double> img(16);
  for (std::size_t i = 0; i < 16; ++i) img[i] = static_cast<double>(i + 1);
  const auto out = shift_image(img, shape, 1, 0);
  for (std::size_t r = 0; r < 4; ++r) {
    EXPECT_EQ(out[r * 4 + 0], 0.0);
    for (std::size_t c = 1; c < 4; ++c) EXPECT_EQ(out[r * 4 + c], img[r * 4 + c - 1]);
  }
}

TEST(Augment, ShiftDownAndMirrorMultiChannel) {
  const ImageShape shape{2, 2, 2};
  const std::vector<double> img{1, 2, 3, 4, 5, 6, 7, 8};  // HWC
  EXPECT_EQ(shift_image(img, shape, 0, 1), (std::vector<double>{0, 0, 0, 0, 1, 2, 3, 4}));
  EXPECT_EQ(mirror_image(img, shape), (std::vector<double>{3, 4, 1, 2, 7, 8, 5, 6}));
}

TEST(Augment, ShiftRequiresImageLayout) {
  const std::vector<double> x{1.0, 2.0};
  Rng r(0);
  AugmentationPolicy shift{AugmentKind::kShift, 1, 0.0};
  EXPECT_THROW(augment(x, {}, shift, r), ConfigError);
}

TEST(Augment, DeterministicForFixedDrawAndDimensionPreserving) {
  const ImageShape shape{3, 3, 1};
  std::vector<double> img(9, 0.5);
  img[4] = 1.0;
  for (const auto kind : {AugmentKind::kShift, AugmentKind::kShiftMirror, AugmentKind::kJitter}) {
    AugmentationPolicy p{kind, 1, 0.2};
    for (int s = 0; s < 20; ++s) {
      Rng a(s);
      Rng b(s);
      const auto x = augment(img, shape, p, a);
      EXPECT_EQ(x, augment(img, shape, p, b));
      EXPECT_EQ(x.size(), img.size());
    }
  }
}

TEST(Augment, KindNamesRoundTrip) {
  for (const auto kind : {AugmentKind::kIdentity, AugmentKind::kShift, AugmentKind::kShiftMirror, AugmentKind::kJitter}) {
    EXPECT_EQ(parse_augment_kind(to_string(kind)), kind);
  }
  EXPECT_THROW(parse_augment_kind("rotate"), ConfigError);
}

TEST(DatasetFile, BinaryRoundTrip) {
  auto s = two_blobs();
  s.samples_per_class = 10;
  const auto ds = make_synthetic(s);
  const auto path = std::filesystem::temp_directory_path() / "mma_data_test" / "ds.bin";
  ds.save(path);
  EXPECT_EQ(Dataset::load(path), ds);
  const auto bytes = ds.to_bytes();
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "MMADATA1");
  EXPECT_EQ(bytes.size(), 8u + 4 + 8 + 8 + 4 + 12 + 20 * (2 * 4 + 2));
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(Dataset::from_bytes(truncated), FormatError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(Dataset::from_bytes(bad_magic), FormatError);
  EXPECT_THROW(Dataset::load(path.parent_path() / "missing.bin"), Error);
}

TEST(DatasetFile, CsvImport) {
  const auto path = std::filesystem::temp_directory_path() / "mma_data_test" / "small.csv";
  std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream out(path);
    out << "id,label,f0,f1\n1,1,2.0,10\n0,0,0.0,20\n2,0,4.0,30\n";
  }
  const auto raw = Dataset::import_csv(path, false);
  EXPECT_EQ(raw.size(), 3u);
  EXPECT_EQ(raw.label(1), 1u);
  EXPECT_EQ(raw.features(2)[0], 4.0);
  const auto norm = Dataset::import_csv(path);
  EXPECT_EQ(norm.features(0)[0], -1.0);
  EXPECT_EQ(norm.features(1)[0], 0.0);
  EXPECT_EQ(norm.features(2)[1], 1.0);
  {
    std::ofstream out(path);
    out << "0,0,1\n2,0,1\n";
  }
  EXPECT_THROW(Dataset::import_csv(path), FormatError);
}

}  // namespace
}  // namespace mma
