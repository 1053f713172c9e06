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

#include <string>

#include "mcdrl/errors.hpp"

namespace mcdrl {

void SegmentationCounts::add(const LabelMap& predicted, const LabelMap& truth) {
  if (predicted.height != truth.height || predicted.width != truth.width ||
      predicted.labels.size() != truth.labels.size()) {
    throw DimensionError("metrics: prediction " + std::to_string(predicted.height) + "x" +
                         std::to_string(predicted.width) + " vs truth " +
                         std::to_string(truth.height) + "x" + std::to_string(truth.width));
  }
  const std::size_t k = classes.size();
  for (std::size_t i = 0; i < truth.labels.size(); ++i) {
    const std::size_t p = predicted.labels[i], g = truth.labels[i];
    if (p > k || g > k) throw ParameterError("metrics: label outside 0.." + std::to_string(k));
    if (p == g) ++correct;
    if (p > 0) ++classes[p - 1].predicted;
    if (g > 0) ++classes[g - 1].truth;
    if (p > 0 && p == g) ++classes[p - 1].intersection;
  }
  total += truth.labels.size();
}

void SegmentationCounts::merge(const SegmentationCounts& other) {
  if (other.classes.size() != classes.size()) throw DimensionError("metrics: class count mismatch");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    classes[i].intersection += other.classes[i].intersection;
    classes[i].predicted += other.classes[i].predicted;
    classes[i].truth += other.classes[i].truth;
  }
  correct += other.correct;
  total += other.total;
}

MetricsReport summarize(const SegmentationCounts& counts) {
  MetricsReport r;
  r.classes.resize(counts.classes.size());
  double dice_sum = 0.0, iou_sum = 0.0;
  for (std::size_t i = 0; i < counts.classes.size(); ++i) {
    const ClassCounts& c = counts.classes[i];
    const std::uint64_t sizes = c.predicted + c.truth;
    if (sizes == 0) continue;
    const auto inter = static_cast<double>(c.intersection);
    ClassScore& s = r.classes[i];
    s.present = true;
    s.dice = 2.0 * inter / static_cast<double>(sizes);
    s.iou = inter / static_cast<double>(sizes - c.intersection);
    dice_sum += s.dice;
    iou_sum += s.iou;
    ++r.present_classes;
  }
  if (r.present_classes > 0) {
    r.mean_dice = dice_sum / static_cast<double>(r.present_classes);
    r.mean_iou = iou_sum / static_cast<double>(r.present_classes);
  }
  if (counts.total > 0) r.accuracy = static_cast<double>(counts.correct) / static_cast<double>(counts.total);
  return r;
}

MetricsReport metrics(const LabelMap& predicted, const LabelMap& truth, std::size_t num_classes) {
  SegmentationCounts counts(num_classes);
  counts.add(predicted, truth);
  return summarize(counts);
}

}  // namespace mcdrl
