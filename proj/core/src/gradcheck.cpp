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
#include "mcdrl/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "mcdrl/errors.hpp"

namespace mcdrl {
namespace {

double evaluate(const LossFn& loss) {
  Tape probe(Tape::Mode::kInference);
  const double v = loss(probe).item();
  if (!std::isfinite(v)) throw NumericError("grad_check: loss is not finite at a probe point");
  return v;
}

}  // namespace

GradCheckReport grad_check(const LossFn& loss, std::span<Tensor> inputs,
                           const GradCheckOptions& options) {
  GradCheckReport report;
  report.tolerance = options.tolerance;

  std::vector<bool> restore_flag(inputs.size());
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    restore_flag[t] = inputs[t].requires_grad();
    inputs[t].set_requires_grad(true);
    inputs[t].clear_grad();
  }
  std::vector<std::vector<double>> analytic(inputs.size());
  {
    Tape tape;
    Tensor value = loss(tape);
    if (!std::isfinite(value.item())) throw NumericError("grad_check: loss is not finite");
    tape.backward(value);
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      auto g = inputs[t].mutable_grad();
      analytic[t].assign(g.begin(), g.end());
      inputs[t].clear_grad();
    }
  }

  const double h = options.step;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    auto x = inputs[t].mutable_data();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double original = x[i];
      x[i] = original + h;
      const double plus = evaluate(loss);
      x[i] = original - h;
      const double minus = evaluate(loss);
      x[i] = original;

      const double numeric = (plus - minus) / (2.0 * h);
      const double a = analytic[t][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.scale_floor});
      const double rel = std::abs(a - numeric) / denom;
      ++report.coordinates;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_tensor = t;
        report.worst_index = i;
      }
      if (rel > options.tolerance && report.failures.size() < options.max_failures) {
        report.failures.push_back({t, i, a, numeric, rel});
      }
    }
  }
  for (std::size_t t = 0; t < inputs.size(); ++t) inputs[t].set_requires_grad(restore_flag[t]);
  report.passed = report.max_relative_error <= options.tolerance;
  return report;
}

GradCheckReport grad_check(const std::function<Tensor(Tape&, const Tensor&)>& f,
                           const Tensor& x, const GradCheckOptions& options) {
  Tensor probe = x.detach();
  std::vector<Tensor> inputs{probe};
  return grad_check([&](Tape& tape) { return f(tape, probe); }, inputs, options);
}

}  // namespace mcdrl
