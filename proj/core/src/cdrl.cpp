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
#include "mcdrl/cdrl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "mcdrl/errors.hpp"
#include "mcdrl/ops.hpp"
#include "mcdrl/rng.hpp"

namespace mcdrl {
namespace {

constexpr std::string_view kConfounderPrefix = "An endoscopy image with ";
constexpr double kEntrySeparationLimit = 0.999;

Tensor near_identity(std::size_t d, Rng& rng) {
  Tensor t = Tensor::zeros({d, d}, true);
  auto w = t.mutable_data();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) w[i * d + j] = (i == j ? 1.0 : 0.0) + 0.01 * rng.normal();
  return t;
}

}  // namespace

const std::vector<std::string>& default_confounder_prompts() {
  static const std::vector<std::string> kPrompts{
      "An endoscopy image with blurry view",
      "An endoscopy image with motion artifacts",
      "An endoscopy image with low resolution",
      "An endoscopy image with bright illumination",
      "An endoscopy image with dim lighting",
      "An endoscopy image with uneven illumination",
      "An endoscopy image with narrow band imaging",
      "An endoscopy image with white light imaging",
      "An endoscopy image with close-up view",
      "An endoscopy image with distant view",
      "An endoscopy image with mucus interference",
      "An endoscopy image with specular reflections",
  };
  return kPrompts;
}

std::vector<std::string> load_prompts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open prompt file " + path.string());
  std::vector<std::string> prompts;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw FormatError(path.string() + ": empty prompt line");
    prompts.push_back(line);
  }
  if (prompts.size() != kDictionarySize) {
    throw FormatError(path.string() + ": expected " + std::to_string(kDictionarySize) +
                      " prompts, found " + std::to_string(prompts.size()));
  }
  return prompts;
}

std::string confounder_descriptor(std::string_view prompt) {
  if (prompt.starts_with(kConfounderPrefix)) return std::string(prompt.substr(kConfounderPrefix.size()));
  return std::string(prompt);
}

std::vector<NamedTensor> ConfounderDictionary::parameters() const {
  return {{"cdrl.entries", entries}, {"cdrl.key_proj", key_proj}, {"cdrl.value_proj", value_proj}};
}

ConfounderDictionary init_dictionary(std::span<const std::string> prompts,
                                     const TextEncoder& encoder, std::uint64_t seed,
                                     bool entries_trainable) {
  if (prompts.size() != kDictionarySize) {
    throw ParameterError("confounder dictionary needs exactly " + std::to_string(kDictionarySize) +
                         " prompts, got " + std::to_string(prompts.size()));
  }
  std::set<std::string> seen;
  for (const auto& p : prompts) {
    if (p.empty()) throw ParameterError("empty confounder prompt");
    if (!seen.insert(p).second) throw ParameterError("duplicate confounder prompt: " + p);
  }
  Tensor entries = encoder.encode_all(prompts);
  const std::size_t d = encoder.embed_dim();
  for (std::size_t i = 0; i < prompts.size(); ++i)
    for (std::size_t j = i + 1; j < prompts.size(); ++j) {
      const double c = ops::cosine_value(entries.data().subspan(i * d, d), entries.data().subspan(j * d, d));
      if (c >= kEntrySeparationLimit) {
        throw ParameterError("confounder prompts " + std::to_string(i) + " and " +
                             std::to_string(j) + " are indistinguishable");
      }
    }
  entries.set_requires_grad(entries_trainable);
  Rng rng(mix_seed(seed, fnv1a("confounder-dictionary")));
  Tensor key = near_identity(d, rng);
  Tensor value = near_identity(d, rng);
  return ConfounderDictionary{std::move(entries), std::move(key), std::move(value)};
}

ConfounderDictionary make_dictionary(Tensor entries, Tensor key_proj, Tensor value_proj) {
  if (entries.rank() != 2) throw DimensionError("dictionary entries must be [M x d]");
  const std::size_t d = entries.dim(1);
  const Shape square{d, d};
  if (key_proj.shape() != square || value_proj.shape() != square) {
    throw DimensionError("dictionary projections must be [d x d]");
  }
  for (std::size_t m = 0; m < entries.dim(0); ++m) {
    double n = 0.0;
    for (std::size_t j = 0; j < d; ++j) n += entries[m * d + j] * entries[m * d + j];
    if (!(std::sqrt(n) > ops::kNormEpsilon)) throw DegenerateVectorError("zero-norm dictionary entry");
  }
  return ConfounderDictionary{std::move(entries), std::move(key_proj), std::move(value_proj)};
}

IntervenedFeatures intervene(Tape& tape, const RegionFeatures& region,
                             const ConfounderDictionary& dictionary) {
  if (!region.rows.defined() || region.rows.rank() != 2 || region.rows.dim(0) == 0) {
    throw DimensionError("intervene: empty region features");
  }
  if (region.rows.dim(1) != dictionary.dim()) {
    throw DimensionError("intervene: feature dim " + std::to_string(region.rows.dim(1)) +
                         " does not match dictionary dim " + std::to_string(dictionary.dim()));
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(dictionary.dim()));
  Tensor keys = ops::matmul(tape, dictionary.entries, dictionary.key_proj);
  Tensor values = ops::matmul(tape, dictionary.entries, dictionary.value_proj);
  Tensor scores = ops::scale(tape, ops::matmul(tape, region.rows, ops::transpose(tape, keys)), inv_sqrt_d);
  Tensor attention = ops::softmax_rows(tape, scores);
  Tensor rows = ops::matmul(tape, attention, values);
  return IntervenedFeatures{std::move(rows), std::move(attention), region.cells, region.grid};
}

IntervenedFeatures bypass(const RegionFeatures& region) {
  return IntervenedFeatures{region.rows, Tensor(), region.cells, region.grid};
}

FeatureMap scatter(Tape& tape, const IntervenedFeatures& intervened, const FeatureMap& fallback) {
  if (intervened.grid != fallback.grid) throw DimensionError("scatter: grid mismatch with fallback map");
  for (std::size_t c : intervened.cells) {
    if (c >= fallback.grid.cells()) {
      throw DimensionError("scatter: cell " + std::to_string(c) + " outside the " +
                           std::to_string(fallback.grid.rows) + "x" +
                           std::to_string(fallback.grid.cols) + " grid");
    }
  }
  return FeatureMap{ops::scatter_rows(tape, fallback.features, intervened.rows, intervened.cells),
                    fallback.grid};
}

DecoderHead::DecoderHead(std::size_t embed_dim, std::size_t classes, std::uint64_t seed) {
  if (embed_dim == 0 || classes == 0) throw ParameterError("decoder needs positive dims");
  Rng rng(mix_seed(seed, fnv1a("decoder-head")));
  weight_ = Tensor::zeros({embed_dim, classes + 1}, true);
  const double s = 1.0 / std::sqrt(static_cast<double>(embed_dim));
  for (double& w : weight_.mutable_data()) w = s * rng.normal();
  bias_ = Tensor::zeros({classes + 1}, true);
}

PredictionMap DecoderHead::decode(Tape& tape, const FeatureMap& map) const {
  Tensor logits = ops::add_row_bias(tape, ops::matmul(tape, map.features, weight_), bias_);
  return PredictionMap{ops::softmax_rows(tape, logits), map.grid};
}

std::vector<NamedTensor> DecoderHead::parameters() const {
  return {{"decoder.weight", weight_}, {"decoder.bias", bias_}};
}

LabelMap predict_labels(const PredictionMap& prediction, std::size_t patch_size) {
  const auto winners = ops::argmax(prediction.probs, 1);
  const GridShape g = prediction.grid;
  LabelMap out(g.rows * patch_size, g.cols * patch_size);
  for (std::size_t y = 0; y < out.height; ++y)
    for (std::size_t x = 0; x < out.width; ++x)
      out.at(y, x) = static_cast<std::uint8_t>(winners[(y / patch_size) * g.cols + x / patch_size]);
  return out;
}

}  // namespace mcdrl
