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
#include <vector>

#include "mcdrl/image.hpp"

namespace mcdrl {

struct AdamWOptions {
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

/// Adam with decoupled weight decay. Parameters that received no gradient
/// since the last zero_grad() are skipped entirely, moments and decay
/// included, and each parameter keeps its own step count.
class AdamW {
 public:
  AdamW(std::vector<NamedTensor> params, const AdamWOptions& options);

  void step();
  void zero_grad();

  const AdamWOptions& options() const { return options_; }
  const std::vector<NamedTensor>& params() const { return params_; }

  // Moments and step counts as named tensors ("adam.m/<name>", "adam.v/<name>",
  // "adam.t/<name>") for checkpointing.
  std::vector<NamedTensor> state() const;
  // Throws FormatError if an expected entry is missing or misshapen.
  void load_state(const std::vector<NamedTensor>& state);

 private:
  struct Slot {
    std::vector<double> m;
    std::vector<double> v;
    std::size_t steps = 0;
  };
  AdamWOptions options_;
  std::vector<NamedTensor> params_;
  std::vector<Slot> slots_;
};

}  // namespace mcdrl
