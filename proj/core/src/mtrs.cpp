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
#include "mcdrl/mtrs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mcdrl/errors.hpp"
#include "mcdrl/ops.hpp"

namespace mcdrl {

std::vector<std::size_t> SelectionMask::selected() const {
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.push_back(i);
  return out;
}

SimilarityVolume similarity_volume(const FeatureMap& map, const Tensor& class_embeddings) {
  if (class_embeddings.rank() != 2 || class_embeddings.dim(1) != map.dim()) {
    throw DimensionError("similarity_volume: embeddings " + shape_string(class_embeddings.shape()) +
                         " do not match feature dim " + std::to_string(map.dim()));
  }
  const std::size_t cells = map.grid.cells(), k = class_embeddings.dim(0), d = map.dim();
  std::vector<double> values(cells * k);
  const auto F = map.features.data();
  const auto E = class_embeddings.data();
  for (std::size_t c = 0; c < cells; ++c)
    for (std::size_t j = 0; j < k; ++j)
      values[c * k + j] = ops::cosine_value(F.subspan(c * d, d), E.subspan(j * d, d));
  return SimilarityVolume{Tensor::from({map.grid.rows, map.grid.cols, k}, std::move(values)), map.grid};
}

Tensor unify(const SimilarityVolume& volume) {
  Tape none(Tape::Mode::kInference);
  return ops::reduce(none, volume.values, ops::Reduce::kMax, 2);
}

std::size_t selection_count(double alpha, std::size_t cells) {
  const auto n = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(cells)));
  return std::max<std::size_t>(1, n);
}

SelectionMask select(const Tensor& scores, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ParameterError("alpha must lie in (0, 1], got " + std::to_string(alpha));
  }
  if (scores.rank() != 2) throw DimensionError("select: scores must be [rows x cols]");
  check_finite(scores, "select");
  const GridShape grid{scores.dim(0), scores.dim(1)};
  const std::size_t n = selection_count(alpha, grid.cells());
  std::vector<std::size_t> order(grid.cells());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  SelectionMask out{grid, alpha, std::vector<bool>(grid.cells(), false), n};
  for (std::size_t i = 0; i < n; ++i) out.mask[order[i]] = true;
  return out;
}

SelectionMask select_all(GridShape grid) {
  return SelectionMask{grid, 1.0, std::vector<bool>(grid.cells(), true), grid.cells()};
}

RegionFeatures extract(Tape& tape, const FeatureMap& map, const SelectionMask& mask) {
  if (mask.grid != map.grid || mask.mask.size() != map.grid.cells()) {
    throw DimensionError("extract: mask grid does not match feature map");
  }
  auto cells = mask.selected();
  Tensor rows = ops::gather_rows(tape, map.features, cells);
  return RegionFeatures{std::move(rows), std::move(cells), map.grid};
}

}  // namespace mcdrl
