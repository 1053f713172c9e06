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
#include "mcdrl/objectives.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "mcdrl/errors.hpp"
#include "mcdrl/ops.hpp"

namespace mcdrl {

void LossConfig::validate() const {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw ParameterError("loss weights must be nonnegative");
  if (!(tau > 0.0)) throw ParameterError("tau must be positive");
}

Tensor ClassDomainTable::target(std::size_t class_k) const {
  if (class_k >= classes()) {
    throw ParameterError("class " + std::to_string(class_k) + " outside table of " +
                         std::to_string(classes()) + " classes");
  }
  const std::size_t d = dim();
  auto row = targets.data().subspan(class_k * d, d);
  return Tensor::from({d}, std::vector<double>(row.begin(), row.end()));
}

ClassDomainTable make_class_domain_table(const TextEncoder& encoder,
                                         std::span<const std::string> class_names,
                                         std::span<const std::string> domain_descriptors) {
  if (class_names.empty() || domain_descriptors.empty()) {
    throw ParameterError("class-domain table needs classes and domains");
  }
  const std::size_t k = class_names.size(), m = domain_descriptors.size(), d = encoder.embed_dim();
  std::vector<double> all;
  all.reserve(k * m * d);
  std::vector<double> means(k * d, 0.0);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < m; ++j) {
      const Tensor e = encoder.encode("A " + class_names[c] + " with " + domain_descriptors[j]);
      all.insert(all.end(), e.data().begin(), e.data().end());
      for (std::size_t i = 0; i < d; ++i) means[c * d + i] += e[i] / static_cast<double>(m);
    }
  return ClassDomainTable{Tensor::from({k, m, d}, std::move(all)), Tensor::from({k, d}, std::move(means))};
}

Tensor seg_loss(Tape& tape, const PredictionMap& prediction, const LabelMap& labels) {
  const GridShape g = prediction.grid;
  if (g.rows == 0 || labels.height % g.rows != 0 || labels.width % g.cols != 0 ||
      labels.height / g.rows != labels.width / g.cols || labels.height == 0) {
    throw DimensionError("seg_loss: labels " + std::to_string(labels.height) + "x" +
                         std::to_string(labels.width) + " do not tile the " +
                         std::to_string(g.rows) + "x" + std::to_string(g.cols) + " prediction grid");
  }
  const std::size_t patch = labels.height / g.rows;
  const std::size_t channels = prediction.channels();
  const double per_pixel = 1.0 / static_cast<double>(labels.height * labels.width);
  std::vector<double> weights(prediction.probs.size(), 0.0);
  for (std::size_t y = 0; y < labels.height; ++y)
    for (std::size_t x = 0; x < labels.width; ++x) {
      const std::size_t label = labels.at(y, x);
      if (label >= channels) {
        throw ParameterError("seg_loss: label " + std::to_string(label) + " outside 0.." +
                             std::to_string(channels - 1));
      }
      const std::size_t cell = (y / patch) * g.cols + x / patch;
      weights[cell * channels + label] += per_pixel;
    }
  return ops::weighted_neg_log(tape, prediction.probs, weights);
}

Tensor causal_loss(Tape& tape, const IntervenedFeatures& intervened,
                   const ClassDomainTable& table, std::size_t class_k) {
  if (!intervened.rows.defined() || intervened.rows.dim(0) == 0) {
    throw DimensionError("causal_loss: no intervened rows");
  }
  const Tensor target = table.target(class_k);
  Tensor pooled = ops::reduce(tape, intervened.rows, ops::Reduce::kMean, 0);
  Tensor diff = ops::sub(tape, pooled, target);
  return ops::reduce_all(tape, ops::mul(tape, diff, diff), ops::Reduce::kSum);
}

Tensor contrast_loss(Tape& tape, const Tensor& f_vis, const Tensor& class_embeddings,
                     std::size_t class_k, double tau) {
  if (!(tau > 0.0)) throw ParameterError("tau must be positive");
  if (class_embeddings.rank() != 2 || f_vis.rank() != 1 || class_embeddings.dim(1) != f_vis.dim(0)) {
    throw DimensionError("contrast_loss: feature " + shape_string(f_vis.shape()) +
                         " vs embeddings " + shape_string(class_embeddings.shape()));
  }
  const std::size_t k = class_embeddings.dim(0), d = f_vis.dim(0);
  if (class_k >= k) throw ParameterError("contrast_loss: class " + std::to_string(class_k) + " invalid");
  Tensor e = ops::normalize_rows(tape, class_embeddings);
  Tensor v = ops::normalize_rows(tape, ops::reshape(tape, f_vis, {1, d}));
  Tensor sims = ops::matmul(tape, v, ops::transpose(tape, e));  // [1 x K]
  Tensor probs = ops::softmax_rows(tape, ops::scale(tape, sims, 1.0 / tau));
  std::vector<double> pick(k, 0.0);
  pick[class_k] = 1.0;
  return ops::weighted_neg_log(tape, probs, pick);
}

Tensor total_loss(Tape& tape, const LossParts& parts, const LossConfig& config) {
  config.validate();
  if (!parts.seg.defined()) throw ParameterError("total_loss: segmentation term missing");
  const auto term = [&](const Tensor& t, double w, const char* name) {
    if (!t.defined()) {
      if (w != 0.0) throw ParameterError(std::string("total_loss: ") + name + " term missing");
      return false;
    }
    check_finite(t, name);
    return true;
  };
  check_finite(parts.seg, "seg");
  Tensor total = parts.seg;
  if (term(parts.causal, config.lambda1, "causal")) {
    total = ops::add(tape, total, ops::scale(tape, parts.causal, config.lambda1));
  }
  if (term(parts.contrast, config.lambda2, "contrast")) {
    total = ops::add(tape, total, ops::scale(tape, parts.contrast, config.lambda2));
  }
  return total;
}

}  // namespace mcdrl
