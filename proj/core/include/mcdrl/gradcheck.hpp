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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mcdrl/tensor.hpp"

namespace mcdrl {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor of the relative error, so coordinates whose true
  // gradient is ~0 are compared on an absolute scale instead of blowing up.
  double scale_floor = 1e-3;
  // Failing coordinates kept in the report.
  std::size_t max_failures = 16;
};

struct GradCheckFailure {
  std::size_t tensor = 0;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
  std::size_t coordinates = 0;
  double tolerance = 0.0;
  bool passed = true;
  std::vector<GradCheckFailure> failures;
};

// Compares the taped gradient of a scalar-valued function against central
// differences, one coordinate at a time.
//
// `loss` must build its result on the tape it is handed from the tensors in
// `inputs`; the checker perturbs those tensors' data in place and restores
// it afterwards. Throws NumericError if any probe yields a non-finite value.
using LossFn = std::function<Tensor(Tape&)>;
GradCheckReport grad_check(const LossFn& loss, std::span<Tensor> inputs,
                           const GradCheckOptions& options = {});

// Single-input convenience form.
GradCheckReport grad_check(const std::function<Tensor(Tape&, const Tensor&)>& f,
                           const Tensor& x, const GradCheckOptions& options = {});

}  // namespace mcdrl
