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
#include <vector>

#include "mcdrl/tensor.hpp"

// Differentiable tensor operations. Each op records its reverse rule on the
// given tape when any input requires a gradient, and throws NumericError if
// it would produce a non-finite value.
namespace mcdrl::ops {

inline constexpr double kNormEpsilon = 1e-12;

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor transpose(Tape& tape, const Tensor& x);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& x, double factor);
// x[m x n] + bias[n] broadcast over rows.
Tensor add_row_bias(Tape& tape, const Tensor& x, const Tensor& bias);
Tensor tanh(Tape& tape, const Tensor& x);

// Row-wise softmax with max subtraction.
Tensor softmax_rows(Tape& tape, const Tensor& x);

enum class Reduce { kSum, kMean, kMax };

// Reduces one axis; the result drops that axis. Max routes the gradient to the
// first maximal entry.
Tensor reduce(Tape& tape, const Tensor& x, Reduce kind, std::size_t axis);
// Reduces every entry to a rank-0 scalar.
Tensor reduce_all(Tape& tape, const Tensor& x, Reduce kind);

// Index of the first maximum along `axis`, one per remaining position.
std::vector<std::size_t> argmax(const Tensor& x, std::size_t axis);

// Scalar cosine similarity of two equal-length vectors.
Tensor cosine(Tape& tape, const Tensor& a, const Tensor& b);
double cosine_value(std::span<const double> a, std::span<const double> b);
// Divides each row by its L2 norm.
Tensor normalize_rows(Tape& tape, const Tensor& x);

Tensor reshape(Tape& tape, const Tensor& x, Shape shape);

// Rows of x[m x n] at `index`, in the given order.
Tensor gather_rows(Tape& tape, const Tensor& x, std::span<const std::size_t> index);
// Copy of base[m x n] with row index[i] replaced by rows[i].
Tensor scatter_rows(Tape& tape, const Tensor& base, const Tensor& rows,
                    std::span<const std::size_t> index);

// Mean over the 3x3 neighbourhood of each cell of a row-major grid whose cells
// are the rows of x[(grid_rows * grid_cols) x d]. Border cells average only
// their in-grid neighbours.
Tensor neighbor_mean(Tape& tape, const Tensor& x, std::size_t grid_rows,
                     std::size_t grid_cols);

// sum_i weights[i] * -log(max(p[i], floor)). Weights are constants.
Tensor weighted_neg_log(Tape& tape, const Tensor& p, std::span<const double> weights,
                        double floor = 1e-12);

}  // namespace mcdrl::ops
