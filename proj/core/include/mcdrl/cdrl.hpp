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
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcdrl/encoders.hpp"
#include "mcdrl/image.hpp"
#include "mcdrl/mtrs.hpp"
#include "mcdrl/tensor.hpp"

namespace mcdrl {

inline constexpr std::size_t kDictionarySize = 12;

// The shipped confounder prompts: three view-quality, three lighting, two
// imaging-technique, two distance and two surface descriptors.
const std::vector<std::string>& default_confounder_prompts();
// Reads exactly kDictionarySize non-empty lines.
std::vector<std::string> load_prompts(const std::filesystem::path& path);
// "An endoscopy image with X" -> "X"; other prompts are returned unchanged.
std::string confounder_descriptor(std::string_view prompt);

/// Confounder dictionary Z with key/value projections.
///
/// Entries are frozen unless requested otherwise; the projections always
/// train. Keys and values are Z * key_proj and Z * value_proj.
struct ConfounderDictionary {
  Tensor entries;     // [M x d]
  Tensor key_proj;    // [d x d]
  Tensor value_proj;  // [d x d]

  std::size_t size() const { return entries.dim(0); }
  std::size_t dim() const { return entries.dim(1); }
  std::vector<NamedTensor> parameters() const;
};

// Encodes the prompts and initialises both projections to identity plus
// N(0, 0.01^2) noise. Throws ParameterError for a prompt count other than 12,
// empty or duplicate prompts, or entries whose pairwise cosine reaches 0.999.
ConfounderDictionary init_dictionary(std::span<const std::string> prompts,
                                     const TextEncoder& encoder, std::uint64_t seed,
                                     bool entries_trainable = false);

// Arbitrary-size dictionary; used for tests and inspection.
ConfounderDictionary make_dictionary(Tensor entries, Tensor key_proj, Tensor value_proj);

struct IntervenedFeatures {
  Tensor rows;       // [N x d]
  Tensor attention;  // [N x M]; undefined when the intervention is bypassed
  std::vector<std::size_t> cells;
  GridShape grid;
};

// rows = softmax(F * keys^T / sqrt(d)) * values
IntervenedFeatures intervene(Tape& tape, const RegionFeatures& region,
                             const ConfounderDictionary& dictionary);
// Identity stand-in used before the intervention is activated.
IntervenedFeatures bypass(const RegionFeatures& region);

// Writes intervened rows back into their cells; other cells keep the fallback map.
FeatureMap scatter(Tape& tape, const IntervenedFeatures& intervened, const FeatureMap& fallback);

/// Per-cell class probabilities over K + 1 channels, channel 0 = background.
struct PredictionMap {
  Tensor probs;  // [cells x (K+1)]
  GridShape grid;
  std::size_t channels() const { return probs.dim(1); }
};

/// Per-cell linear classifier followed by a softmax.
class DecoderHead {
 public:
  DecoderHead(std::size_t embed_dim, std::size_t classes, std::uint64_t seed);

  PredictionMap decode(Tape& tape, const FeatureMap& map) const;
  std::vector<NamedTensor> parameters() const;
  std::size_t classes() const { return bias_.dim(0) - 1; }

  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }

 private:
  Tensor weight_;  // [d x (K+1)]
  Tensor bias_;    // [K+1]
};

// Arg-max channel per cell, replicated over each patch_size x patch_size block.
LabelMap predict_labels(const PredictionMap& prediction, std::size_t patch_size);

}  // namespace mcdrl
