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
#include <string>
#include <vector>

#include "mcdrl/benchdata.hpp"
#include "mcdrl/cdrl.hpp"
#include "mcdrl/encoders.hpp"
#include "mcdrl/mtrs.hpp"
#include "mcdrl/objectives.hpp"

namespace mcdrl {

struct ModelOptions {
  std::size_t patch_size = 4;
  std::size_t embed_dim = 16;
  std::size_t num_classes = kDefaultNumClasses;
  std::uint64_t seed = 1;
  std::uint64_t text_seed = 2024;
  bool dictionary_trainable = false;
  std::vector<std::string> class_names = default_class_names();
  std::vector<std::string> prompts = default_confounder_prompts();
};

// What one forward pass does at the current point of the schedule.
struct StageSettings {
  double alpha = 1.0;       // 1 keeps every cell
  bool intervene = false;   // false replaces the intervention with identity
  LossConfig loss;
};

/// Full segmentation pipeline:
/// image -> C1 -> (select, intervene, scatter) -> decoder -> P.
class Model {
 public:
  explicit Model(const ModelOptions& options);

  struct Output {
    PredictionMap prediction;
    SelectionMask mask;
    IntervenedFeatures intervened;
    Tensor pooled;  // F_vis
    LossParts parts;
    Tensor total;
  };

  // Forward pass and losses for one labelled sample.
  Output forward(Tape& tape, const SegmentationSample& sample, const StageSettings& stage) const;
  // Prediction only; never records on a tape.
  PredictionMap predict(const Image& image, const StageSettings& stage) const;

  // Every tensor that defines the model, trainable or not, in a fixed order.
  std::vector<NamedTensor> parameters() const;
  std::vector<NamedTensor> trainable_parameters() const;

  const ModelOptions& options() const { return options_; }
  const VisionEncoder& vision() const { return vision_; }
  const TextEncoder& text() const { return text_; }
  const Tensor& class_embeddings() const { return class_embeddings_; }
  const ClassDomainTable& class_domain_table() const { return table_; }
  const ConfounderDictionary& dictionary() const { return dictionary_; }
  const DecoderHead& decoder() const { return decoder_; }

 private:
  struct Trunk {
    FeatureMap map;
    SelectionMask mask;
    IntervenedFeatures intervened;
    FeatureMap decoded_input;
  };
  Trunk run_trunk(Tape& tape, const Image& image, const StageSettings& stage) const;

  ModelOptions options_;
  VisionEncoder vision_;
  TextEncoder text_;
  Tensor class_embeddings_;
  ClassDomainTable table_;
  ConfounderDictionary dictionary_;
  DecoderHead decoder_;
};

}  // namespace mcdrl
