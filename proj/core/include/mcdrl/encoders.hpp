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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcdrl/image.hpp"
#include "mcdrl/tensor.hpp"

namespace mcdrl {

struct VisionEncoderOptions {
  std::size_t patch_size = 4;
  std::size_t embed_dim = 16;
  bool trainable = true;
};

/// Stand-in for a pretrained image tower: a linear patch projection followed
/// by a residual tanh mixing stage over each cell's 3x3 neighbourhood.
///
///   u    = patches * W_patch + b_patch
///   C1   = u + tanh(neighbor_mean(u) * W_mix + b_mix)
///
/// The receptive field of a cell is therefore its own patch plus the eight
/// surrounding patches.
class VisionEncoder {
 public:
  VisionEncoder(const VisionEncoderOptions& options, std::uint64_t seed);

  // Throws DimensionError unless H and W are multiples of the patch size, and
  // ParameterError for pixel values outside [0, 1].
  FeatureMap encode(Tape& tape, const Image& image) const;

  const VisionEncoderOptions& options() const { return options_; }
  std::vector<NamedTensor> parameters() const;

 private:
  VisionEncoderOptions options_;
  Tensor patch_weight_;  // [3 p^2 x d]
  Tensor patch_bias_;    // [d]
  Tensor mix_weight_;    // [d x d]
  Tensor mix_bias_;      // [d]
};

// Spatial mean of all grid features, shape [d].
Tensor pool_image(Tape& tape, const FeatureMap& map);

/// Frozen text tower: each lower-cased alphanumeric token maps to a seeded
/// Gaussian vector; a prompt embeds as the unit-normalised token sum.
class TextEncoder {
 public:
  TextEncoder(std::size_t embed_dim, std::uint64_t seed);

  // [d] embedding with unit norm. Throws ParameterError on an empty prompt.
  Tensor encode(std::string_view prompt) const;
  // Stacks encodings into [n x d].
  Tensor encode_all(std::span<const std::string> prompts) const;

  std::size_t embed_dim() const { return embed_dim_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::size_t embed_dim_;
  std::uint64_t seed_;
};

std::vector<std::string> tokenize(std::string_view text);

const std::vector<std::string>& default_class_names();
std::string class_prompt(std::string_view class_name);

// Max pairwise cosine allowed between class prompt embeddings.
inline constexpr double kClassSeparationLimit = 0.95;

// [K x d] embeddings of "A {class} in an endoscopic image". Throws
// ParameterError if two classes are closer than kClassSeparationLimit.
Tensor class_embeddings(const TextEncoder& encoder, std::span<const std::string> class_names);

}  // namespace mcdrl
