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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mcdrl/image.hpp"

namespace mcdrl {

/// Appearance confounders of one acquisition site. Transforms touch pixels
/// only, never geometry, so labels are identical across sites.
///
/// Documented ranges:
///   brightness_gain        [0.5, 1.5]
///   blur_radius            0..3 (box blur, pixels)
///   color_cast             [-0.2, 0.2] per RGB channel, additive
///   noise_amplitude        [0, 0.2] (Gaussian sigma)
///   occlusion_probability  [0, 1] (chance of one specular highlight blob)
struct DomainSpec {
  char site = 'I';
  double brightness_gain = 1.0;
  int blur_radius = 0;
  std::array<double, 3> color_cast{0.0, 0.0, 0.0};
  double noise_amplitude = 0.0;
  double occlusion_probability = 0.0;

  void validate() const;
  bool same_parameters(const DomainSpec& other) const;
  static DomainSpec identity(char site = 'I') { return DomainSpec{site}; }
};

// Sites A..E with pairwise distinct parameter tuples.
const std::vector<DomainSpec>& default_sites();
std::vector<DomainSpec> load_sites(const std::filesystem::path& path);
std::string sites_to_json(std::span<const DomainSpec> sites);

struct SegmentationSample {
  Image image;
  LabelMap labels;  // 0 background, class_id + 1 on lesion pixels
  std::size_t class_id = 0;
  std::size_t domain = 0;  // index into the dataset's domain list
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kDefaultNumClasses = 5;
inline constexpr double kMinLesionFraction = 0.01;
inline constexpr double kMaxLesionFraction = 0.5;
inline constexpr int kMaxShapeAttempts = 16;

// Renders a class-specific lesion on textured tissue and applies the domain
// transform to the image. The label map depends only on (seed, class_k).
SegmentationSample generate_sample(std::uint64_t seed, std::size_t class_k, const DomainSpec& domain,
                                   std::size_t height, std::size_t width, std::size_t domain_index = 0);

struct Dataset {
  std::vector<SegmentationSample> samples;
  std::vector<DomainSpec> domains;
  std::size_t num_classes = kDefaultNumClasses;
  std::size_t height = 0;
  std::size_t width = 0;
};

// n_per_domain samples per domain, classes assigned round-robin so every
// domain's class histogram is uniform to within one.
Dataset generate_split(std::size_t n_per_domain, std::uint64_t seed, std::span<const DomainSpec> domains,
                       std::size_t height = 32, std::size_t width = 32,
                       std::size_t num_classes = kDefaultNumClasses);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Train on every domain except `held_out`, test on `held_out`.
SplitIndices hold_out(const Dataset& dataset, std::size_t held_out);
std::size_t site_index(const Dataset& dataset, char site);

// On-disk layout: DIR/manifest.json plus DIR/samples/NNNNN.mcdt, each an
// H x W x 4 float64 tensor (RGB, then the label as a real channel).
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir, std::uint64_t seed,
                   std::size_t n_per_domain);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace mcdrl
