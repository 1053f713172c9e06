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
#include "mcdrl/optimizer.hpp"

#include <cmath>
#include <string>

#include "mcdrl/errors.hpp"

namespace mcdrl {

AdamW::AdamW(std::vector<NamedTensor> params, const AdamWOptions& options)
    : options_(options), params_(std::move(params)) {
  if (!(options.learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
  if (!(options.weight_decay >= 0.0)) throw ParameterError("weight decay must be nonnegative");
  slots_.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    slots_[i].m.assign(params_[i].tensor.size(), 0.0);
    slots_[i].v.assign(params_[i].tensor.size(), 0.0);
  }
}

void AdamW::step() {
  const double lr = options_.learning_rate, b1 = options_.beta1, b2 = options_.beta2;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i].tensor;
    if (!p.requires_grad() || !p.has_grad()) continue;
    Slot& s = slots_[i];
    ++s.steps;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(s.steps));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(s.steps));
    auto w = p.mutable_data();
    const auto g = p.grad();
    for (std::size_t j = 0; j < w.size(); ++j) {
      w[j] -= lr * options_.weight_decay * w[j];
      s.m[j] = b1 * s.m[j] + (1.0 - b1) * g[j];
      s.v[j] = b2 * s.v[j] + (1.0 - b2) * g[j] * g[j];
      const double m_hat = s.m[j] / c1, v_hat = s.v[j] / c2;
      w[j] -= lr * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
  }
}

void AdamW::zero_grad() {
  for (auto& p : params_) p.tensor.clear_grad();
}

std::vector<NamedTensor> AdamW::state() const {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Shape& shape = params_[i].tensor.shape();
    out.push_back({"adam.m/" + params_[i].name, Tensor::from(shape, slots_[i].m)});
    out.push_back({"adam.v/" + params_[i].name, Tensor::from(shape, slots_[i].v)});
    out.push_back({"adam.t/" + params_[i].name, Tensor::scalar(static_cast<double>(slots_[i].steps))});
  }
  return out;
}

void AdamW::load_state(const std::vector<NamedTensor>& state) {
  const auto find = [&](const std::string& name) -> const Tensor& {
    for (const auto& e : state)
      if (e.name == name) return e.tensor;
    throw FormatError("optimizer state entry missing: " + name);
  };
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const std::string& name = params_[i].name;
    const Tensor& m = find("adam.m/" + name);
    const Tensor& v = find("adam.v/" + name);
    const Tensor& t = find("adam.t/" + name);
    if (m.size() != slots_[i].m.size() || v.size() != slots_[i].v.size() || t.size() != 1) {
      throw FormatError("optimizer state for " + name + " has the wrong size");
    }
    slots_[i].m.assign(m.data().begin(), m.data().end());
    slots_[i].v.assign(v.data().begin(), v.data().end());
    slots_[i].steps = static_cast<std::size_t>(t.item());
  }
}

}  // namespace mcdrl
