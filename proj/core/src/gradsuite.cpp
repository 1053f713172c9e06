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
#include "mcdrl/gradsuite.hpp"

#include <json.hpp>

#include "mcdrl/cdrl.hpp"
#include "mcdrl/errors.hpp"
#include "mcdrl/model.hpp"
#include "mcdrl/objectives.hpp"
#include "mcdrl/rng.hpp"

namespace mcdrl {
namespace {

Tensor random_tensor(Shape shape, double stddev, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  for (double& v : t.mutable_data()) v = stddev * rng.normal();
  return t;
}

std::size_t between(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

struct Instance {
  LossFn loss;
  std::vector<Tensor> inputs;
  std::vector<std::string> names;
};

Instance seg_instance(Rng& rng) {
  const std::size_t rows = between(rng, 2, 3), cols = between(rng, 2, 3), patch = 2;
  const std::size_t d = between(rng, 3, 6), k = between(rng, 2, 5);
  DecoderHead head(d, k, rng.next());
  for (double& v : head.bias().mutable_data()) v = 0.3 * rng.normal();
  FeatureMap map{random_tensor({rows * cols, d}, 1.0, rng), {rows, cols}};
  LabelMap labels(rows * patch, cols * patch);
  for (auto& l : labels.labels) l = static_cast<std::uint8_t>(rng.below(k + 1));
  Instance in;
  in.inputs = {map.features, head.weight(), head.bias()};
  in.names = {"features", "decoder.weight", "decoder.bias"};
  in.loss = [head, map, labels](Tape& tape) {
    return seg_loss(tape, head.decode(tape, map), labels);
  };
  return in;
}

Instance causal_instance(Rng& rng) {
  const std::size_t n = between(rng, 1, 6), d = between(rng, 2, 8), m = between(rng, 1, 12);
  const std::size_t k = between(rng, 1, 5), domains = between(rng, 1, 4);
  ConfounderDictionary dict =
      make_dictionary(random_tensor({m, d}, 1.0, rng), random_tensor({d, d}, 0.6, rng), random_tensor({d, d}, 0.6, rng));
  const GridShape grid{1, n};
  RegionFeatures region{random_tensor({n, d}, 1.0, rng), {}, grid};
  for (std::size_t i = 0; i < n; ++i) region.cells.push_back(i);
  ClassDomainTable table;
  table.embeddings = Tensor::zeros({k, domains, d});
  table.targets = Tensor::zeros({k, d});
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < domains; ++j)
      for (std::size_t e = 0; e < d; ++e) {
        const double v = rng.normal();
        table.embeddings.mutable_data()[(c * domains + j) * d + e] = v;
        table.targets.mutable_data()[c * d + e] += v / static_cast<double>(domains);
      }
  const std::size_t target = rng.below(k);
  Instance in;
  in.inputs = {region.rows, dict.entries, dict.key_proj, dict.value_proj};
  in.names = {"region", "cdrl.entries", "cdrl.key_proj", "cdrl.value_proj"};
  in.loss = [region, dict, table, target](Tape& tape) {
    return causal_loss(tape, intervene(tape, region, dict), table, target);
  };
  return in;
}

Instance contrast_instance(Rng& rng) {
  const std::size_t d = between(rng, 2, 8), k = between(rng, 1, 5);
  Tensor f_vis = random_tensor({d}, 1.0, rng);
  Tensor classes = random_tensor({k, d}, 1.0, rng);
  classes.set_requires_grad(false);
  const std::size_t target = rng.below(k);
  const double tau = rng.uniform(0.2, 1.0);
  Instance in;
  in.inputs = {f_vis};
  in.names = {"f_vis"};
  in.loss = [f_vis, classes, target, tau](Tape& tape) {
    return contrast_loss(tape, f_vis, classes, target, tau);
  };
  return in;
}

Instance total_instance(Rng& rng) {
  ModelOptions options;
  options.patch_size = 4;
  options.embed_dim = 16;
  options.seed = rng.next();
  auto model = std::make_shared<Model>(options);
  SegmentationSample sample;
  const std::size_t side = 4 * between(rng, 2, 3);
  sample.image = Image(side, side);
  for (double& p : sample.image.pixels) p = rng.uniform();
  sample.class_id = rng.below(options.num_classes);
  sample.labels = LabelMap(side, side);
  for (auto& l : sample.labels.labels) l = rng.uniform() < 0.3 ? static_cast<std::uint8_t>(sample.class_id + 1) : 0;
  StageSettings stage;
  stage.alpha = rng.uniform(0.2, 1.0);
  stage.intervene = true;
  Instance in;
  for (const auto& p : model->trainable_parameters()) {
    in.inputs.push_back(p.tensor);
    in.names.push_back(p.name);
  }
  in.loss = [model, sample, stage](Tape& tape) { return model->forward(tape, sample, stage).total; };
  return in;
}

LossGradReport check_loss(const std::string& name, Instance (*make)(Rng&), std::size_t instances, Rng& rng,
                          const GradCheckOptions& options) {
  LossGradReport report;
  report.loss = name;
  report.instances = instances;
  for (std::size_t i = 0; i < instances; ++i) {
    Instance in = make(rng);
    const GradCheckReport r = grad_check(in.loss, in.inputs, options);
    report.coordinates += r.coordinates;
    report.max_relative_error = std::max(report.max_relative_error, r.max_relative_error);
    report.passed = report.passed && r.passed;
    for (const auto& f : r.failures) {
      if (report.failures.size() >= options.max_failures) break;
      report.failures.push_back({i, in.names.at(f.tensor), f.index, f.analytic, f.numeric, f.relative_error});
    }
  }
  return report;
}

}  // namespace

bool GradSuiteReport::passed() const {
  for (const auto& l : losses)
    if (!l.passed) return false;
  return true;
}

std::string GradSuiteReport::to_json() const {
  using json = nlohmann::json;
  json j{{"tolerance", tolerance}, {"step", step}, {"passed", passed()}};
  json arr = json::array();
  for (const auto& l : losses) {
    json fails = json::array();
    for (const auto& f : l.failures) {
      fails.push_back({{"instance", f.instance}, {"tensor", f.tensor}, {"index", f.index},
                       {"analytic", f.analytic}, {"numeric", f.numeric}, {"relative_error", f.relative_error}});
    }
    arr.push_back({{"loss", l.loss}, {"instances", l.instances}, {"coordinates", l.coordinates},
                   {"max_relative_error", l.max_relative_error}, {"passed", l.passed}, {"failures", fails}});
  }
  j["losses"] = arr;
  return j.dump(2);
}

GradSuiteReport run_grad_suite(std::size_t instances, std::uint64_t seed, const GradCheckOptions& options) {
  if (instances == 0) throw ParameterError("gradient suite needs at least one instance");
  Rng rng(mix_seed(seed, fnv1a("grad-suite")));
  GradSuiteReport report;
  report.tolerance = options.tolerance;
  report.step = options.step;
  report.losses.push_back(check_loss("seg", seg_instance, instances, rng, options));
  report.losses.push_back(check_loss("causal", causal_instance, instances, rng, options));
  report.losses.push_back(check_loss("contrast", contrast_instance, instances, rng, options));
  report.losses.push_back(check_loss("total", total_instance, instances, rng, options));
  return report;
}

}  // namespace mcdrl
