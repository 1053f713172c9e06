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
#include "mcdrl/model.hpp"

#include "mcdrl/errors.hpp"
#include "mcdrl/ops.hpp"
#include "mcdrl/rng.hpp"

namespace mcdrl {
namespace {

std::vector<std::string> descriptors(const std::vector<std::string>& prompts) {
  std::vector<std::string> out;
  for (const auto& p : prompts) out.push_back(confounder_descriptor(p));
  return out;
}

std::vector<std::string> checked_names(const ModelOptions& o) {
  if (o.class_names.size() != o.num_classes) {
    throw ParameterError("model has " + std::to_string(o.num_classes) + " classes but " +
                         std::to_string(o.class_names.size()) + " class names");
  }
  return o.class_names;
}

}  // namespace

Model::Model(const ModelOptions& options)
    : options_(options),
      vision_(VisionEncoderOptions{options.patch_size, options.embed_dim, true}, options.seed),
      text_(options.embed_dim, options.text_seed),
      class_embeddings_(mcdrl::class_embeddings(text_, checked_names(options))),
      table_(make_class_domain_table(text_, options.class_names, descriptors(options.prompts))),
      dictionary_(init_dictionary(options.prompts, text_, options.seed, options.dictionary_trainable)),
      decoder_(options.embed_dim, options.num_classes, options.seed) {}

Model::Trunk Model::run_trunk(Tape& tape, const Image& image, const StageSettings& stage) const {
  Trunk t;
  t.map = vision_.encode(tape, image);
  if (stage.alpha >= 1.0) {
    t.mask = select_all(t.map.grid);
  } else {
    t.mask = select(unify(similarity_volume(t.map, class_embeddings_)), stage.alpha);
  }
  const RegionFeatures region = extract(tape, t.map, t.mask);
  t.intervened = stage.intervene ? intervene(tape, region, dictionary_) : bypass(region);
  t.decoded_input = scatter(tape, t.intervened, t.map);
  return t;
}

Model::Output Model::forward(Tape& tape, const SegmentationSample& sample, const StageSettings& stage) const {
  if (sample.class_id >= options_.num_classes) throw ParameterError("sample class out of range");
  Trunk t = run_trunk(tape, sample.image, stage);
  Output out;
  out.prediction = decoder_.decode(tape, t.decoded_input);
  out.pooled = pool_image(tape, t.map);
  out.parts.seg = seg_loss(tape, out.prediction, sample.labels);
  if (stage.loss.lambda1 > 0.0) {
    if (!stage.intervene) throw StateError("causal loss requires an active intervention");
    out.parts.causal = causal_loss(tape, t.intervened, table_, sample.class_id);
  }
  if (stage.loss.lambda2 > 0.0) {
    out.parts.contrast = contrast_loss(tape, out.pooled, class_embeddings_, sample.class_id, stage.loss.tau);
  }
  out.total = total_loss(tape, out.parts, stage.loss);
  out.mask = std::move(t.mask);
  out.intervened = std::move(t.intervened);
  return out;
}

PredictionMap Model::predict(const Image& image, const StageSettings& stage) const {
  Tape none(Tape::Mode::kInference);
  Trunk t = run_trunk(none, image, stage);
  return decoder_.decode(none, t.decoded_input);
}

std::vector<NamedTensor> Model::parameters() const {
  std::vector<NamedTensor> out = vision_.parameters();
  for (auto& p : dictionary_.parameters()) out.push_back(p);
  for (auto& p : decoder_.parameters()) out.push_back(p);
  return out;
}

std::vector<NamedTensor> Model::trainable_parameters() const {
  std::vector<NamedTensor> out;
  for (auto& p : parameters())
    if (p.tensor.requires_grad()) out.push_back(p);
  return out;
}

}  // namespace mcdrl
