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
#include "mcdrl/encoders.hpp"

#include <cctype>
#include <cmath>

#include "mcdrl/errors.hpp"
#include "mcdrl/ops.hpp"
#include "mcdrl/rng.hpp"

namespace mcdrl {
namespace {

Tensor gaussian(Shape shape, double stddev, Rng& rng, bool requires_grad) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (double& v : t.mutable_data()) v = stddev * rng.normal();
  return t;
}

}  // namespace

VisionEncoder::VisionEncoder(const VisionEncoderOptions& options, std::uint64_t seed)
    : options_(options) {
  if (options.patch_size == 0 || options.embed_dim == 0) {
    throw ParameterError("vision encoder needs positive patch size and embedding dim");
  }
  const std::size_t in = 3 * options.patch_size * options.patch_size;
  const std::size_t d = options.embed_dim;
  Rng rng(mix_seed(seed, fnv1a("vision-encoder")));
  patch_weight_ = gaussian({in, d}, 1.0 / std::sqrt(static_cast<double>(in)), rng, options.trainable);
  patch_bias_ = gaussian({d}, 0.1, rng, options.trainable);
  mix_weight_ = gaussian({d, d}, 0.5 / std::sqrt(static_cast<double>(d)), rng, options.trainable);
  mix_bias_ = Tensor::zeros({d}, options.trainable);
}

FeatureMap VisionEncoder::encode(Tape& tape, const Image& image) const {
  const std::size_t p = options_.patch_size;
  if (image.height == 0 || image.width == 0 || image.height % p != 0 || image.width % p != 0) {
    throw DimensionError("image " + std::to_string(image.height) + "x" +
                         std::to_string(image.width) + " is not divisible by patch size " +
                         std::to_string(p));
  }
  if (image.pixels.size() != image.height * image.width * 3) {
    throw DimensionError("image pixel buffer does not match H x W x 3");
  }
  for (double v : image.pixels) {
    if (!(v >= 0.0 && v <= 1.0)) throw ParameterError("pixel value outside [0, 1]");
  }
  const GridShape grid{image.height / p, image.width / p};
  const std::size_t in = 3 * p * p;
  std::vector<double> patches(grid.cells() * in);
  for (std::size_t gr = 0; gr < grid.rows; ++gr)
    for (std::size_t gc = 0; gc < grid.cols; ++gc) {
      double* dst = &patches[(gr * grid.cols + gc) * in];
      for (std::size_t dy = 0; dy < p; ++dy)
        for (std::size_t dx = 0; dx < p; ++dx)
          for (std::size_t c = 0; c < 3; ++c) *dst++ = image.at(gr * p + dy, gc * p + dx, c);
    }
  Tensor x = Tensor::from({grid.cells(), in}, std::move(patches));

  Tensor u = ops::add_row_bias(tape, ops::matmul(tape, x, patch_weight_), patch_bias_);
  Tensor context = ops::neighbor_mean(tape, u, grid.rows, grid.cols);
  Tensor mixed = ops::tanh(tape, ops::add_row_bias(tape, ops::matmul(tape, context, mix_weight_), mix_bias_));
  return FeatureMap{ops::add(tape, u, mixed), grid};
}

std::vector<NamedTensor> VisionEncoder::parameters() const {
  return {{"vision.patch_weight", patch_weight_},
          {"vision.patch_bias", patch_bias_},
          {"vision.mix_weight", mix_weight_},
          {"vision.mix_bias", mix_bias_}};
}

Tensor pool_image(Tape& tape, const FeatureMap& map) {
  return ops::reduce(tape, map.features, ops::Reduce::kMean, 0);
}

TextEncoder::TextEncoder(std::size_t embed_dim, std::uint64_t seed)
    : embed_dim_(embed_dim), seed_(seed) {
  if (embed_dim == 0) throw ParameterError("text encoder needs a positive embedding dim");
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Tensor TextEncoder::encode(std::string_view prompt) const {
  const auto tokens = tokenize(prompt);
  if (tokens.empty()) throw ParameterError("cannot encode an empty prompt");
  std::vector<double> sum(embed_dim_, 0.0);
  for (const auto& token : tokens) {
    Rng rng(mix_seed(seed_, fnv1a(token)));
    for (double& v : sum) v += rng.normal();
  }
  double norm = 0.0;
  for (double v : sum) norm += v * v;
  norm = std::sqrt(norm);
  if (!(norm > ops::kNormEpsilon)) throw DegenerateVectorError("degenerate text embedding");
  for (double& v : sum) v /= norm;
  return Tensor::from({embed_dim_}, std::move(sum));
}

Tensor TextEncoder::encode_all(std::span<const std::string> prompts) const {
  if (prompts.empty()) throw ParameterError("encode_all needs at least one prompt");
  std::vector<double> rows;
  rows.reserve(prompts.size() * embed_dim_);
  for (const auto& p : prompts) {
    const Tensor e = encode(p);
    rows.insert(rows.end(), e.data().begin(), e.data().end());
  }
  return Tensor::from({prompts.size(), embed_dim_}, std::move(rows));
}

const std::vector<std::string>& default_class_names() {
  static const std::vector<std::string> kNames{"Polyps", "Tumors", "Inflam", "Nodules", "Cyst"};
  return kNames;
}

std::string class_prompt(std::string_view class_name) {
  return "A " + std::string(class_name) + " in an endoscopic image";
}

Tensor class_embeddings(const TextEncoder& encoder, std::span<const std::string> class_names) {
  std::vector<std::string> prompts;
  for (const auto& name : class_names) prompts.push_back(class_prompt(name));
  Tensor table = encoder.encode_all(prompts);
  const std::size_t d = encoder.embed_dim();
  for (std::size_t i = 0; i < prompts.size(); ++i)
    for (std::size_t j = i + 1; j < prompts.size(); ++j) {
      const double c = ops::cosine_value(table.data().subspan(i * d, d), table.data().subspan(j * d, d));
      if (c >= kClassSeparationLimit) {
        throw ParameterError("class prompts '" + class_names[i] + "' and '" + class_names[j] +
                             "' embed too closely (cosine " + std::to_string(c) + ")");
      }
    }
  return table;
}

}  // namespace mcdrl
