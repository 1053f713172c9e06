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
#include <span>
#include <string>

#include "mcdrl/cdrl.hpp"
#include "mcdrl/encoders.hpp"
#include "mcdrl/image.hpp"
#include "mcdrl/tensor.hpp"

namespace mcdrl {

struct LossConfig {
  double lambda1 = 0.5;  // causal weight
  double lambda2 = 0.1;  // contrastive weight
  double tau = 0.5;      // contrastive temperature

  // Throws ParameterError unless the weights are >= 0 and tau > 0.
  void validate() const;
};

/// Embeddings of "A {class_k} with {domain_m}" for every class and
/// confounder descriptor, with the per-class average over domains
/// precomputed as the causal target.
struct ClassDomainTable {
  Tensor embeddings;  // [K x M x d]
  Tensor targets;     // [K x d], mean over the M domains

  std::size_t classes() const { return embeddings.dim(0); }
  std::size_t domains() const { return embeddings.dim(1); }
  std::size_t dim() const { return embeddings.dim(2); }
  Tensor target(std::size_t class_k) const;
};

ClassDomainTable make_class_domain_table(const TextEncoder& encoder,
                                         std::span<const std::string> class_names,
                                         std::span<const std::string> domain_descriptors);

// Mean over pixels of -log p(true label), with each pixel reading the
// probability of the grid cell that covers it. The label map must be an
// integer multiple of the prediction grid in both directions.
Tensor seg_loss(Tape& tape, const PredictionMap& prediction, const LabelMap& labels);

// Squared L2 between the mean intervened row and the class target.
Tensor causal_loss(Tape& tape, const IntervenedFeatures& intervened,
                   const ClassDomainTable& table, std::size_t class_k);

// -log softmax_k(cos(e_j, f_vis) / tau) over the K class embeddings.
Tensor contrast_loss(Tape& tape, const Tensor& f_vis, const Tensor& class_embeddings,
                     std::size_t class_k, double tau);

/// Loss terms of one sample. Terms whose weight is zero may be left undefined.
struct LossParts {
  Tensor seg;
  Tensor causal;
  Tensor contrast;
};

// seg + lambda1 * causal + lambda2 * contrast
Tensor total_loss(Tape& tape, const LossParts& parts, const LossConfig& config);

}  // namespace mcdrl
