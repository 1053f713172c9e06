// Copyright 2026 The MCDRL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#include "mcdrl/benchdata.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "mcdrl/errors.hpp"

namespace mcdrl {
namespace {

double lesion_fraction(const LabelMap& y) {
  const auto n = std::count_if(y.labels.begin(), y.labels.end(), [](std::uint8_t v) { return v != 0; });
  return static_cast<double>(n) / static_cast<double>(y.labels.size());
}

TEST(BenchdataTest, SameSeedIsBitIdentical) {
  for (const DomainSpec& d : default_sites()) {
    SegmentationSample a = generate_sample(99, 2, d, 32, 32);
    SegmentationSample b = generate_sample(99, 2, d, 32, 32);
    EXPECT_EQ(a.image, b.image);
    EXPECT_EQ(a.labels, b.labels);
  }
}

TEST(BenchdataTest, LabelsIgnoreDomain) {
  const DomainSpec identity = DomainSpec::identity();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SegmentationSample base = generate_sample(seed, seed % 5, identity, 32, 32);
    for (const DomainSpec& d : default_sites()) {
      SegmentationSample s = generate_sample(seed, seed % 5, d, 32, 32);
      EXPECT_EQ(s.labels, base.labels);
      EXPECT_NE(s.image, base.image);
    }
  }
}

TEST(BenchdataTest, LabelsUseClassId) {
  SegmentationSample s = generate_sample(4, 3, DomainSpec::identity(), 32, 32);
  for (std::uint8_t v : s.labels.labels) EXPECT_TRUE(v == 0 || v == 4);
  for (double p : s.image.pixels) {
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
}

TEST(BenchdataTest, LesionAreaWithinBounds) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const double f = lesion_fraction(generate_sample(seed, seed % 5, DomainSpec::identity(), 32, 32).labels);
    ASSERT_GE(f, kMinLesionFraction) << seed;
    ASSERT_LE(f, kMaxLesionFraction) << seed;
  }
}

TEST(BenchdataTest, RejectsBadArguments) {
  EXPECT_THROW(generate_sample(1, 255, DomainSpec::identity(), 32, 32), ParameterError);
  EXPECT_THROW(generate_sample(1, 0, DomainSpec::identity(), 0, 32), ParameterError);
  DomainSpec bad = DomainSpec::identity();
  bad.blur_radius = 4;
  EXPECT_THROW(bad.validate(), ParameterError);
  bad = DomainSpec::identity();
  bad.color_cast[1] = 0.3;
  EXPECT_THROW(bad.validate(), ParameterError);
}

TEST(BenchdataTest, SitesAreDistinctAndShipped) {
  const auto& sites = default_sites();
  ASSERT_EQ(sites.size(), 5u);
  for (std::size_t i = 0; i < sites.size(); ++i) {
    EXPECT_EQ(sites[i].site, static_cast<char>('A' + i));
    EXPECT_NO_THROW(sites[i].validate());
    for (std::size_t j = i + 1; j < sites.size(); ++j) EXPECT_FALSE(sites[i].same_parameters(sites[j]));
  }
  const auto shipped = load_sites(std::filesystem::path(MCDRL_DATA_DIR) / "sites.json");
  ASSERT_EQ(shipped.size(), sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    EXPECT_EQ(shipped[i].site, sites[i].site);
    EXPECT_TRUE(shipped[i].same_parameters(sites[i]));
  }
}

TEST(BenchdataTest, SplitCountsAndBalance) {
  Dataset ds = generate_split(200, 7, default_sites());
  ASSERT_EQ(ds.samples.size(), 1000u);
  std::array<std::array<int, 5>, 5> hist{};
  for (const auto& s : ds.samples) ++hist[s.domain][s.class_id];
  for (const auto& row : hist) {
    EXPECT_EQ(row[0] + row[1] + row[2] + row[3] + row[4], 200);
    EXPECT_LE(*std::max_element(row.begin(), row.end()) - *std::min_element(row.begin(), row.end()), 1);
  }
  Dataset odd = generate_split(7, 1, default_sites());
  for (std::size_t d = 0; d < 5; ++d) {
    std::array<int, 5> h{};
    for (const auto& s : odd.samples)
      if (s.domain == d) ++h[s.class_id];
    EXPECT_LE(*std::max_element(h.begin(), h.end()) - *std::min_element(h.begin(), h.end()), 1);
  }
}

TEST(BenchdataTest, HoldOutHasNoLeakage) {
  Dataset ds = generate_split(200, 7, default_sites());
  const std::size_t a = site_index(ds, 'A');
  SplitIndices split = hold_out(ds, a);
  EXPECT_EQ(split.train.size(), 800u);
  EXPECT_EQ(split.test.size(), 200u);
  std::set<std::size_t> seen;
  for (std::size_t i : split.train) {
    EXPECT_NE(ds.samples[i].domain, a);
    seen.insert(i);
  }
  for (std::size_t i : split.test) {
    EXPECT_EQ(ds.samples[i].domain, a);
    EXPECT_TRUE(seen.insert(i).second);
  }
  std::set<std::uint64_t> seeds;
  for (const auto& s : ds.samples) seeds.insert(s.seed);
  EXPECT_EQ(seeds.size(), ds.samples.size());
  EXPECT_THROW(site_index(ds, 'F'), ParameterError);
  EXPECT_THROW(hold_out(ds, 5), ParameterError);
}

TEST(BenchdataTest, SitesSeparableByMeanColour) {
  Dataset ds = generate_split(40, 3, default_sites());
  std::array<std::array<double, 3>, 5> centroid{};
  std::array<std::vector<std::array<double, 3>>, 5> means;
  for (const auto& s : ds.samples) {
    std::array<double, 3> m{};
    for (std::size_t i = 0; i < s.image.pixels.size(); ++i) m[i % 3] += s.image.pixels[i];
    for (double& v : m) v /= static_cast<double>(s.image.pixels.size() / 3);
    means[s.domain].push_back(m);
    for (int c = 0; c < 3; ++c) centroid[s.domain][c] += m[c] / 40.0;
  }
  int correct = 0;
  for (std::size_t d = 0; d < 5; ++d)
    for (const auto& m : means[d]) {
      std::size_t best = 0;
      double best_dist = 1e9;
      for (std::size_t e = 0; e < 5; ++e) {
        double dist = 0.0;
        for (int c = 0; c < 3; ++c) dist += (m[c] - centroid[e][c]) * (m[c] - centroid[e][c]);
        if (dist < best_dist) best_dist = dist, best = e;
      }
      correct += best == d;
    }
  EXPECT_GT(correct, 160);
}

TEST(BenchdataTest, DiskRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "mcdrl_ds_roundtrip";
  std::filesystem::remove_all(dir);
  Dataset ds = generate_split(3, 11, default_sites(), 16, 16);
  write_dataset(ds, dir, 11, 3);
  Dataset back = read_dataset(dir);
  ASSERT_EQ(back.samples.size(), ds.samples.size());
  EXPECT_EQ(back.height, 16u);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    EXPECT_EQ(back.samples[i].image, ds.samples[i].image);
    EXPECT_EQ(back.samples[i].labels, ds.samples[i].labels);
    EXPECT_EQ(back.samples[i].class_id, ds.samples[i].class_id);
    EXPECT_EQ(back.samples[i].domain, ds.samples[i].domain);
  }
  std::filesystem::remove_all(dir);
  EXPECT_THROW(read_dataset(dir), IoError);
}

}  // namespace
}  // namespace mcdrl
