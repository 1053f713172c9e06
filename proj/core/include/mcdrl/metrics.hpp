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
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mcdrl/image.hpp"

namespace mcdrl {

// Overlap counts for one lesion class.
struct ClassCounts {
  std::uint64_t intersection = 0;  // |P ∩ G|
  std::uint64_t predicted = 0;     // |P|
  std::uint64_t truth = 0;         // |G|
};

/// Integer counts behind a metrics report. Counts from different samples
/// merge by plain summation, so the order of accumulation never matters.
struct SegmentationCounts {
  std::vector<ClassCounts> classes;  // lesion classes 1..K at index 0..K-1
  std::uint64_t correct = 0;
  std::uint64_t total = 0;

  explicit SegmentationCounts(std::size_t num_classes = 0) : classes(num_classes) {}

  // Throws DimensionError on shape mismatch, ParameterError on labels > K.
  void add(const LabelMap& predicted, const LabelMap& truth);
  void merge(const SegmentationCounts& other);
};

struct ClassScore {
  double dice = 1.0;
  double iou = 1.0;
  // False when the class appears in neither map; such classes score 1 and are
  // left out of the means.
  bool present = false;
};

struct MetricsReport {
  std::vector<ClassScore> classes;
  double accuracy = 1.0;
  double mean_dice = 1.0;
  double mean_iou = 1.0;
  std::size_t present_classes = 0;
};

MetricsReport summarize(const SegmentationCounts& counts);
MetricsReport metrics(const LabelMap& predicted, const LabelMap& truth, std::size_t num_classes);

}  // namespace mcdrl
