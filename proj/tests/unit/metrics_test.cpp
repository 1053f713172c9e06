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
#include "mcdrl/metrics.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "mcdrl/errors.hpp"
#include "mcdrl/rng.hpp"

namespace mcdrl {
namespace {

LabelMap row_labels(std::vector<std::uint8_t> v) {
  LabelMap m(1, v.size());
  m.labels = std::move(v);
  return m;
}

TEST(MetricsTest, IdenticalMaps) {
  LabelMap a = row_labels({0, 1, 1, 2, 0, 3});
  MetricsReport r = metrics(a, a, 3);
  EXPECT_EQ(r.mean_dice, 1.0);
  EXPECT_EQ(r.mean_iou, 1.0);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.present_classes, 3u);
}

TEST(MetricsTest, DisjointMasks) {
  MetricsReport r = metrics(row_labels({1, 1, 0, 0}), row_labels({0, 0, 1, 1}), 1);
  EXPECT_EQ(r.classes[0].dice, 0.0);
  EXPECT_EQ(r.classes[0].iou, 0.0);
  EXPECT_EQ(r.accuracy, 0.0);
}

TEST(MetricsTest, CountingCase) {
  MetricsReport r = metrics(row_labels({1, 1, 1, 1, 0, 0}), row_labels({1, 1, 0, 0, 0, 0}), 1);
  EXPECT_EQ(r.classes[0].dice, 2.0 / 3.0);
  EXPECT_EQ(r.classes[0].iou, 0.5);
  EXPECT_EQ(2.0 * r.classes[0].iou / (1.0 + r.classes[0].iou), 2.0 / 3.0);
}

TEST(MetricsTest, AbsentClassScoresOneAndIsExcluded) {
  MetricsReport r = metrics(row_labels({1, 1, 0, 0}), row_labels({1, 0, 0, 0}), 3);
  EXPECT_FALSE(r.classes[1].present);
  EXPECT_EQ(r.classes[1].dice, 1.0);
  EXPECT_EQ(r.present_classes, 1u);
  EXPECT_EQ(r.mean_dice, r.classes[0].dice);
}

TEST(MetricsTest, Errors) {
  EXPECT_THROW(metrics(row_labels({0, 1}), row_labels({0, 1, 1}), 1), DimensionError);
  EXPECT_THROW(metrics(row_labels({0, 4}), row_labels({0, 1}), 2), ParameterError);
}

TEST(MetricsTest, RandomPairsSatisfyIdentity) {
  Rng rng(31);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng.below(200);
    LabelMap a(1, n), b(1, n);
    for (std::size_t i = 0; i < n; ++i) {
      a.labels[i] = rng.uniform() < 0.4 ? 1 : 0;
      b.labels[i] = rng.uniform() < 0.4 ? 1 : 0;
    }
    a.labels[0] = 1;
    MetricsReport r = metrics(a, b, 1);
    const ClassScore& s = r.classes[0];
    ASSERT_NEAR(s.dice, 2.0 * s.iou / (1.0 + s.iou), 1e-12);
    ASSERT_EQ(metrics(a, a, 1).classes[0].dice, 1.0);
  }
}

TEST(MetricsTest, MergedCountsMatchConcatenation) {
  Rng rng(3);
  SegmentationCounts merged(2), whole(2);
  LabelMap pa(1, 20), ga(1, 20), pb(1, 20), gb(1, 20), pab(1, 40), gab(1, 40);
  for (LabelMap* m : {&pa, &ga, &pb, &gb})
    for (auto& l : m->labels) l = static_cast<std::uint8_t>(rng.below(3));
  for (std::size_t i = 0; i < 20; ++i) {
    pab.labels[i] = pa.labels[i], pab.labels[20 + i] = pb.labels[i];
    gab.labels[i] = ga.labels[i], gab.labels[20 + i] = gb.labels[i];
  }
  SegmentationCounts first(2), second(2);
  first.add(pa, ga);
  second.add(pb, gb);
  second.merge(first);
  whole.add(pab, gab);
  const MetricsReport x = summarize(second), y = summarize(whole);
  EXPECT_EQ(x.mean_dice, y.mean_dice);
  EXPECT_EQ(x.accuracy, y.accuracy);
}

}  // namespace
}  // namespace mcdrl
