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
#include <utility>
#include <vector>

#include "mcdrl/image.hpp"
#include "mcdrl/tensor.hpp"

// Target region selection: score every grid cell against the class text
// embeddings, keep the top-N cells, and gather their features.
namespace mcdrl {

/// Cosine between every cell feature and every class embedding, stored as a
/// [rows x cols x K] tensor.
struct SimilarityVolume {
  Tensor values;
  GridShape grid;
  std::size_t classes() const { return values.dim(2); }
  double at(std::size_t row, std::size_t col, std::size_t k) const {
    return values[(row * grid.cols + col) * classes() + k];
  }
};

struct SelectionMask {
  GridShape grid;
  double alpha = 1.0;
  std::vector<bool> mask;  // row-major, one entry per cell
  std::size_t count = 0;

  // Linear indices of the selected cells in increasing order.
  std::vector<std::size_t> selected() const;
};

/// Features of the selected cells, ordered row-major, plus their positions.
struct RegionFeatures {
  Tensor rows;                     // [N x d]
  std::vector<std::size_t> cells;  // linear cell index of each row
  GridShape grid;

  std::pair<std::size_t, std::size_t> coord(std::size_t i) const {
    return {cells[i] / grid.cols, cells[i] % grid.cols};
  }
};

// Values are detached from any tape: the selection is a hard decision.
SimilarityVolume similarity_volume(const FeatureMap& map, const Tensor& class_embeddings);

// Per-cell maximum over classes, [rows x cols].
Tensor unify(const SimilarityVolume& volume);

// max(1, floor(alpha * cells)).
std::size_t selection_count(double alpha, std::size_t cells);

// Keeps the selection_count(alpha, cells) highest scores; equal scores prefer
// the earlier row-major cell. Throws ParameterError unless 0 < alpha <= 1.
SelectionMask select(const Tensor& scores, double alpha);
SelectionMask select_all(GridShape grid);

// Gathers selected rows; gradients reach only the selected cells.
RegionFeatures extract(Tape& tape, const FeatureMap& map, const SelectionMask& mask);

}  // namespace mcdrl
