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
#include "mcdrl/ops.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "mcdrl/errors.hpp"
#include "mcdrl/gradcheck.hpp"
#include "test_util.hpp"

namespace mcdrl {
namespace {

using ops::Reduce;
using testing::random_tensor;

TEST(MatmulTest, IdentityLeavesMatrix) {
  Tape tape;
  Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  Tensor a = Tensor::from({2, 2}, {0.3, -1.2, 4.0, 2.5});
  EXPECT_EQ(testing::values(ops::matmul(tape, eye, a)), testing::values(a));
}

TEST(MatmulTest, HandExpanded) {
  Tape tape;
  Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::from({2, 1}, {1, 1});
  Tensor c = ops::matmul(tape, a, b);
  EXPECT_EQ(c.shape(), (Shape{2, 1}));
  EXPECT_EQ(c[0], 3.0);
  EXPECT_EQ(c[1], 7.0);
}

TEST(MatmulTest, InnerMismatch) {
  Tape tape;
  EXPECT_THROW(ops::matmul(tape, Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), DimensionError);
}

TEST(MatmulTest, Associative) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Tape tape;
    Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 2}, rng), c = random_tensor({2, 5}, rng);
    Tensor left = ops::matmul(tape, ops::matmul(tape, a, b), c);
    Tensor right = ops::matmul(tape, a, ops::matmul(tape, b, c));
    for (std::size_t i = 0; i < left.size(); ++i) EXPECT_NEAR(left[i], right[i], 1e-10);
  }
}

TEST(SoftmaxTest, Symmetric) {
  Tape tape;
  Tensor p = ops::softmax_rows(tape, Tensor::from({1, 2}, {0, 0}));
  EXPECT_EQ(p[0], 0.5);
  EXPECT_EQ(p[1], 0.5);
}

TEST(SoftmaxTest, LargeInputsStable) {
  Tape tape;
  Tensor p = ops::softmax_rows(tape, Tensor::from({1, 2}, {1000, 0}));
  EXPECT_NEAR(p[0], 1.0, 1e-12);
  EXPECT_NEAR(p[1], 0.0, 1e-12);
}

TEST(SoftmaxTest, LogInputs) {
  Tape tape;
  Tensor p = ops::softmax_rows(tape, Tensor::from({1, 3}, {std::log(1.0), std::log(2.0), std::log(3.0)}));
  EXPECT_NEAR(p[0], 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(p[1], 2.0 / 6.0, 1e-15);
  EXPECT_NEAR(p[2], 3.0 / 6.0, 1e-15);
}

TEST(SoftmaxTest, RowsSumToOne) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    Tape tape;
    const std::size_t m = 1 + rng.below(5), n = 1 + rng.below(8);
    Tensor p = ops::softmax_rows(tape, random_tensor({m, n}, rng, -50, 50));
    for (std::size_t r = 0; r < m; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        EXPECT_GE(p.at(r, c), 0.0);
        s += p.at(r, c);
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(SoftmaxTest, NanIsNumericError) {
  Tape tape;
  Tensor x = Tensor::from({1, 2}, {std::numeric_limits<double>::quiet_NaN(), 0});
  EXPECT_THROW(ops::softmax_rows(tape, x), NumericError);
}

TEST(CosineTest, KnownValues) {
  const std::vector<double> e0{1, 0}, e1{0, 1}, diag{1, 1}, v{0.3, -2.0, 5.0};
  EXPECT_NEAR(ops::cosine_value(v, v), 1.0, 1e-12);
  EXPECT_EQ(ops::cosine_value(e0, e1), 0.0);
  EXPECT_NEAR(ops::cosine_value(e0, diag), 1.0 / std::sqrt(2.0), 1e-15);
  Tape tape;
  EXPECT_NEAR(ops::cosine(tape, Tensor::from({2}, e0), Tensor::from({2}, diag)).item(), 0.7071067811865476, 1e-15);
}

TEST(CosineTest, ZeroNormIsDegenerate) {
  const std::vector<double> z{0, 0}, e0{1, 0};
  EXPECT_THROW(ops::cosine_value(z, e0), DegenerateVectorError);
  Tape tape;
  EXPECT_THROW(ops::cosine(tape, Tensor::from({2}, e0), Tensor::zeros({2})), DegenerateVectorError);
}

TEST(CosineTest, BoundedOnRandomVectors) {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = 1 + rng.below(16);
    Tensor a = random_tensor({d}, rng), b = random_tensor({d}, rng);
    const double c = ops::cosine_value(a.data(), b.data());
    EXPECT_LE(std::abs(c), 1.0 + 1e-12);
    EXPECT_NEAR(ops::cosine_value(a.data(), a.data()), 1.0, 1e-12);
  }
}

TEST(ReduceTest, MeanAndMax) {
  Tape tape;
  EXPECT_EQ(ops::reduce(tape, Tensor::from({3}, {1, 2, 3}), Reduce::kMean, 0).item(), 2.0);
  EXPECT_EQ(ops::reduce(tape, Tensor::from({3}, {0.2, -0.1, 0.9}), Reduce::kMax, 0).item(), 0.9);
  EXPECT_EQ(ops::reduce_all(tape, Tensor::from({2, 2}, {1, 2, 3, 4}), Reduce::kSum).item(), 10.0);
}

TEST(ReduceTest, AxisDropped) {
  Tape tape;
  Tensor x = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor rows = ops::reduce(tape, x, Reduce::kSum, 1);
  EXPECT_EQ(rows.shape(), (Shape{2}));
  EXPECT_EQ(rows[0], 6.0);
  EXPECT_EQ(rows[1], 15.0);
  Tensor cols = ops::reduce(tape, x, Reduce::kMean, 0);
  EXPECT_EQ(cols.shape(), (Shape{3}));
  EXPECT_EQ(cols[2], 4.5);
  EXPECT_THROW(ops::reduce(tape, x, Reduce::kSum, 2), DimensionError);
}

TEST(ReduceTest, MaxTieGoesToLowestIndex) {
  Tensor x = Tensor::from({2}, {0.5, 0.5}, true);
  EXPECT_EQ(ops::argmax(x, 0), std::vector<std::size_t>{0});
  Tape tape;
  Tensor m = ops::reduce(tape, x, Reduce::kMax, 0);
  EXPECT_EQ(m.item(), 0.5);
  tape.backward(m);
  EXPECT_EQ(x.grad()[0], 1.0);
  EXPECT_EQ(x.grad()[1], 0.0);
}

TEST(StructuralOpsTest, GatherScatter) {
  Tape tape;
  Tensor x = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6});
  const std::vector<std::size_t> idx{2, 0};
  Tensor g = ops::gather_rows(tape, x, idx);
  EXPECT_EQ(testing::values(g), (std::vector<double>{5, 6, 1, 2}));
  Tensor s = ops::scatter_rows(tape, x, Tensor::from({2, 2}, {-1, -2, -3, -4}), idx);
  EXPECT_EQ(testing::values(s), (std::vector<double>{-3, -4, 3, 4, -1, -2}));
  const std::vector<std::size_t> dup{1, 1};
  EXPECT_THROW(ops::scatter_rows(tape, x, Tensor::zeros({2, 2}), dup), DimensionError);
  const std::vector<std::size_t> out_of_range{3};
  EXPECT_ANY_THROW(ops::gather_rows(tape, x, out_of_range));
}

TEST(StructuralOpsTest, NeighborMeanOnTinyGrid) {
  Tape tape;
  Tensor x = Tensor::from({4, 1}, {1, 2, 3, 4});
  Tensor m = ops::neighbor_mean(tape, x, 2, 2);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(m[i], 2.5);
  Tensor line = ops::neighbor_mean(tape, Tensor::from({3, 1}, {0, 3, 6}), 1, 3);
  EXPECT_DOUBLE_EQ(line[0], 1.5);
  EXPECT_DOUBLE_EQ(line[1], 3.0);
  EXPECT_DOUBLE_EQ(line[2], 4.5);
}

TEST(StructuralOpsTest, WeightedNegLogClamps) {
  Tape tape;
  const std::vector<double> w{1.0, 0.0};
  Tensor p = Tensor::from({2}, {0.0, 0.5});
  EXPECT_NEAR(ops::weighted_neg_log(tape, p, w).item(), -std::log(1e-12), 1e-9);
}

// Every differentiable op against central differences on random inputs in [-2, 2].
class OpGradientTest : public ::testing::Test {
 protected:
  void expect_passes(const std::function<Tensor(Tape&, std::vector<Tensor>&)>& f, std::vector<Tensor> inputs) {
    LossFn loss = [&](Tape& tape) {
      Tensor out = f(tape, inputs);
      // Weighted sum so every output coordinate carries a distinct gradient.
      Tensor w = Tensor::zeros(out.shape());
      for (std::size_t i = 0; i < w.size(); ++i) w.mutable_data()[i] = 0.5 + 0.37 * static_cast<double>(i % 7);
      return ops::reduce_all(tape, ops::mul(tape, out, w), Reduce::kSum);
    };
    const GradCheckReport r = grad_check(loss, inputs);
    EXPECT_TRUE(r.passed) << "max relative error " << r.max_relative_error;
    EXPECT_LE(r.max_relative_error, 1e-4);
  }
  Rng rng{42};
};

TEST_F(OpGradientTest, Matmul) {
  for (int t = 0; t < 5; ++t)
    expect_passes([](Tape& tp, auto& in) { return ops::matmul(tp, in[0], in[1]); },
                  {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)});
}

TEST_F(OpGradientTest, ElementwiseAndBias) {
  for (int t = 0; t < 5; ++t) {
    expect_passes([](Tape& tp, auto& in) { return ops::sub(tp, ops::mul(tp, in[0], in[1]), in[0]); },
                  {random_tensor({2, 3}, rng), random_tensor({2, 3}, rng)});
    expect_passes([](Tape& tp, auto& in) { return ops::tanh(tp, ops::add_row_bias(tp, in[0], in[1])); },
                  {random_tensor({3, 4}, rng), random_tensor({4}, rng)});
    expect_passes([](Tape& tp, auto& in) { return ops::transpose(tp, ops::scale(tp, in[0], -1.7)); },
                  {random_tensor({2, 5}, rng)});
  }
}

TEST_F(OpGradientTest, SoftmaxAndNormalize) {
  for (int t = 0; t < 5; ++t) {
    expect_passes([](Tape& tp, auto& in) { return ops::softmax_rows(tp, in[0]); }, {random_tensor({3, 5}, rng)});
    expect_passes([](Tape& tp, auto& in) { return ops::normalize_rows(tp, in[0]); }, {random_tensor({4, 3}, rng)});
    expect_passes([](Tape& tp, auto& in) { return ops::cosine(tp, in[0], in[1]); },
                  {random_tensor({6}, rng), random_tensor({6}, rng)});
  }
}

TEST_F(OpGradientTest, Reductions) {
  for (int t = 0; t < 5; ++t) {
    for (Reduce kind : {Reduce::kSum, Reduce::kMean, Reduce::kMax}) {
      expect_passes([kind](Tape& tp, auto& in) { return ops::reduce(tp, in[0], kind, 1); },
                    {random_tensor({3, 4}, rng)});
      expect_passes([kind](Tape& tp, auto& in) { return ops::reduce(tp, in[0], kind, 0); },
                    {random_tensor({2, 3, 2}, rng)});
    }
  }
}

TEST_F(OpGradientTest, GatherScatterNeighbor) {
  const std::vector<std::size_t> idx{3, 0, 5};
  for (int t = 0; t < 5; ++t) {
    expect_passes([&](Tape& tp, auto& in) { return ops::gather_rows(tp, in[0], idx); },
                  {random_tensor({6, 3}, rng)});
    expect_passes([&](Tape& tp, auto& in) { return ops::scatter_rows(tp, in[0], in[1], idx); },
                  {random_tensor({6, 3}, rng), random_tensor({3, 3}, rng)});
    expect_passes([](Tape& tp, auto& in) { return ops::neighbor_mean(tp, in[0], 2, 3); },
                  {random_tensor({6, 2}, rng)});
    expect_passes([](Tape& tp, auto& in) { return ops::reshape(tp, in[0], {3, 4}); },
                  {random_tensor({2, 6}, rng)});
  }
}

TEST_F(OpGradientTest, WeightedNegLog) {
  const std::vector<double> w{0.2, 0.0, 1.3, 0.5};
  for (int t = 0; t < 5; ++t)
    expect_passes([&](Tape& tp, auto& in) { return ops::weighted_neg_log(tp, in[0], w); },
                  {random_tensor({4}, rng, 0.05, 1.0)});
}

}  // namespace
}  // namespace mcdrl
