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

#include "mcdrl/gradcheck.hpp"

namespace mcdrl {

struct LocatedFailure {
  std::size_t instance = 0;
  std::string tensor;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct LossGradReport {
  std::string loss;  // seg, causal, contrast or total
  std::size_t instances = 0;
  std::size_t coordinates = 0;
  double max_relative_error = 0.0;
  bool passed = true;
  std::vector<LocatedFailure> failures;
};

struct GradSuiteReport {
  double tolerance = 0.0;
  double step = 0.0;
  std::vector<LossGradReport> losses;
  bool passed() const;
  std::string to_json() const;
};

// Finite-difference checks of every loss and of the total objective on
// `instances` random small problems each.
GradSuiteReport run_grad_suite(std::size_t instances = 20, std::uint64_t seed = 1,
                               const GradCheckOptions& options = {});

}  // namespace mcdrl
