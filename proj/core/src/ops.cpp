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

#include <algorithm>
#include <cmath>
#include <string>

#include "mcdrl/errors.hpp"

namespace mcdrl::ops {
namespace {

bool wants_grad(const Tape& tape, std::initializer_list<const Tensor*> inputs) {
  if (!tape.recording()) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

Tensor make_output(Shape shape, std::vector<double> values, bool requires_grad,
                   const char* op) {
  Tensor out = Tensor::from(std::move(shape), std::move(values), requires_grad);
  check_finite(out, op);
  return out;
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got " + shape_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

void check_input(const Tensor& t, const char* op) {
  if (!t.defined()) throw DimensionError(std::string(op) + ": undefined tensor");
  check_finite(t, op);
}

// Splits a shape around `axis` into (outer, extent, inner) strides.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions disagree " + shape_string(a.shape()) +
                         " x " + shape_string(b.shape()));
  }
  const auto A = a.data();
  const auto B = b.data();
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      const double* brow = &B[p * n];
      double* crow = &c[i * n];
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  const bool rg = wants_grad(tape, {&a, &b});
  Tensor out = make_output({m, n}, std::move(c), rg, "matmul");
  if (rg) {
    tape.record(out, [a = a, b = b, out, m, k, n]() mutable {
      const auto G = out.grad();
      if (a.requires_grad()) {
        auto dA = a.mutable_grad();
        const auto B = b.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += G[i * n + j] * B[p * n + j];
            dA[i * k + p] += s;
          }
      }
      if (b.requires_grad()) {
        auto dB = b.mutable_grad();
        const auto A = a.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            for (std::size_t j = 0; j < n; ++j) dB[p * n + j] += av * G[i * n + j];
          }
      }
    });
  }
  return out;
}

Tensor transpose(Tape& tape, const Tensor& x) {
  require_rank(x, 2, "transpose");
  const std::size_t m = x.dim(0), n = x.dim(1);
  const auto X = x.data();
  std::vector<double> y(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[j * m + i] = X[i * n + j];
  const bool rg = wants_grad(tape, {&x});
  Tensor out = make_output({n, m}, std::move(y), rg, "transpose");
  if (rg) {
    tape.record(out, [x = x, out, m, n]() mutable {
      const auto G = out.grad();
      auto dX = x.mutable_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) dX[i * n + j] += G[j * m + i];
    });
  }
  return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] + b[i];
  const bool rg = wants_grad(tape, {&a, &b});
  Tensor out = make_output(a.shape(), std::move(y), rg, "add");
  if (rg) {
    tape.record(out, [a = a, b = b, out]() mutable {
      const auto G = out.grad();
      if (a.requires_grad()) {
        auto d = a.mutable_grad();
        for (std::size_t i = 0; i < G.size(); ++i) d[i] += G[i];
      }
      if (b.requires_grad()) {
        auto d = b.mutable_grad();
        for (std::size_t i = 0; i < G.size(); ++i) d[i] += G[i];
      }
    });
  }
  return out;
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] - b[i];
  const bool rg = wants_grad(tape, {&a, &b});
  Tensor out = make_output(a.shape(), std::move(y), rg, "sub");
  if (rg) {
    tape.record(out, [a = a, b = b, out]() mutable {
      const auto G = out.grad();
      if (a.requires_grad()) {
        auto d = a.mutable_grad();
        for (std::size_t i = 0; i < G.size(); ++i) d[i] += G[i];
      }
      if (b.requires_grad()) {
        auto d = b.mutable_grad();
        for (std::size_t i = 0; i < G.size(); ++i) d[i] -= G[i];
      }
    });
  }
  return out;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] * b[i];
  const bool rg = wants_grad(tape, {&a, &b});
  Tensor out = make_output(a.shape(), std::move(y), rg, "mul");
  if (rg) {
    tape.record(out, [a = a, b = b, out]() mutable {
      const auto G = out.grad();
      if (a.requires_grad()) {
        auto d = a.mutable_grad();
        for (std::size_t i = 0; i < G.size(); ++i) d[i] += G[i] * b[i];
      }
      if (b.requires_grad()) {
        auto d = b.mutable_grad();
        for (std::size_t i = 0; i < G.size(); ++i) d[i] += G[i] * a[i];
      }
    });
  }
  return out;
}

Tensor scale(Tape& tape, const Tensor& x, double factor) {
  check_input(x, "scale");
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] * factor;
  const bool rg = wants_grad(tape, {&x});
  Tensor out = make_output(x.shape(), std::move(y), rg, "scale");
  if (rg) {
    tape.record(out, [x = x, out, factor]() mutable {
      const auto G = out.grad();
      auto d = x.mutable_grad();
      for (std::size_t i = 0; i < G.size(); ++i) d[i] += G[i] * factor;
    });
  }
  return out;
}

Tensor add_row_bias(Tape& tape, const Tensor& x, const Tensor& bias) {
  require_rank(x, 2, "add_row_bias");
  require_rank(bias, 1, "add_row_bias");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (bias.dim(0) != n) {
    throw DimensionError("add_row_bias: bias " + shape_string(bias.shape()) +
                         " does not match " + shape_string(x.shape()));
  }
  std::vector<double> y(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] = x[i * n + j] + bias[j];
  const bool rg = wants_grad(tape, {&x, &bias});
  Tensor out = make_output({m, n}, std::move(y), rg, "add_row_bias");
  if (rg) {
    tape.record(out, [x = x, bias = bias, out, m, n]() mutable {
      const auto G = out.grad();
      if (x.requires_grad()) {
        auto d = x.mutable_grad();
        for (std::size_t i = 0; i < G.size(); ++i) d[i] += G[i];
      }
      if (bias.requires_grad()) {
        auto d = bias.mutable_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) d[j] += G[i * n + j];
      }
    });
  }
  return out;
}

Tensor tanh(Tape& tape, const Tensor& x) {
  check_input(x, "tanh");
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(x[i]);
  const bool rg = wants_grad(tape, {&x});
  Tensor out = make_output(x.shape(), std::move(y), rg, "tanh");
  if (rg) {
    tape.record(out, [x = x, out]() mutable {
      const auto G = out.grad();
      auto d = x.mutable_grad();
      for (std::size_t i = 0; i < G.size(); ++i) d[i] += G[i] * (1.0 - out[i] * out[i]);
    });
  }
  return out;
}

Tensor softmax_rows(Tape& tape, const Tensor& x) {
  require_rank(x, 2, "softmax_rows");
  check_input(x, "softmax_rows");
  const std::size_t m = x.dim(0), n = x.dim(1);
  std::vector<double> y(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = &x.data()[i * n];
    const double mx = *std::max_element(row, row + n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      y[i * n + j] = std::exp(row[j] - mx);
      total += y[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] /= total;
  }
  const bool rg = wants_grad(tape, {&x});
  Tensor out = make_output({m, n}, std::move(y), rg, "softmax_rows");
  if (rg) {
    tape.record(out, [x = x, out, m, n]() mutable {
      const auto G = out.grad();
      const auto Y = out.data();
      auto d = x.mutable_grad();
      for (std::size_t i = 0; i < m; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += G[i * n + j] * Y[i * n + j];
        for (std::size_t j = 0; j < n; ++j) d[i * n + j] += Y[i * n + j] * (G[i * n + j] - dot);
      }
    });
  }
  return out;
}

std::vector<std::size_t> argmax(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw DimensionError("argmax: axis " + std::to_string(axis) + " invalid for " +
                         shape_string(x.shape()));
  }
  const AxisSplit s = split_axis(x.shape(), axis);
  std::vector<std::size_t> idx(s.outer * s.inner, 0);
  const auto X = x.data();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.inner; ++i) {
      std::size_t best = 0;
      double best_v = X[o * s.extent * s.inner + i];
      for (std::size_t j = 1; j < s.extent; ++j) {
        const double v = X[(o * s.extent + j) * s.inner + i];
        if (v > best_v) {
          best_v = v;
          best = j;
        }
      }
      idx[o * s.inner + i] = best;
    }
  return idx;
}

Tensor reduce(Tape& tape, const Tensor& x, Reduce kind, std::size_t axis) {
  if (axis >= x.rank()) {
    throw DimensionError("reduce: axis " + std::to_string(axis) + " invalid for " +
                         shape_string(x.shape()));
  }
  check_input(x, "reduce");
  const AxisSplit s = split_axis(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));

  const auto X = x.data();
  std::vector<double> y(s.outer * s.inner, 0.0);
  std::vector<std::size_t> winners;
  if (kind == Reduce::kMax) {
    winners = argmax(x, axis);
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t i = 0; i < s.inner; ++i)
        y[o * s.inner + i] = X[(o * s.extent + winners[o * s.inner + i]) * s.inner + i];
  } else {
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t j = 0; j < s.extent; ++j)
        for (std::size_t i = 0; i < s.inner; ++i)
          y[o * s.inner + i] += X[(o * s.extent + j) * s.inner + i];
    if (kind == Reduce::kMean) {
      for (double& v : y) v /= static_cast<double>(s.extent);
    }
  }
  const bool rg = wants_grad(tape, {&x});
  Tensor out = make_output(std::move(out_shape), std::move(y), rg, "reduce");
  if (rg) {
    tape.record(out, [x = x, out, kind, s, winners = std::move(winners)]() mutable {
      const auto G = out.grad();
      auto d = x.mutable_grad();
      const double w = kind == Reduce::kMean ? 1.0 / static_cast<double>(s.extent) : 1.0;
      for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t i = 0; i < s.inner; ++i) {
          const double g = G[o * s.inner + i];
          if (kind == Reduce::kMax) {
            d[(o * s.extent + winners[o * s.inner + i]) * s.inner + i] += g;
          } else {
            for (std::size_t j = 0; j < s.extent; ++j) d[(o * s.extent + j) * s.inner + i] += g * w;
          }
        }
    });
  }
  return out;
}

Tensor reduce_all(Tape& tape, const Tensor& x, Reduce kind) {
  Tensor flat = reshape(tape, x, {x.size()});
  return reduce(tape, flat, kind, 0);
}

double cosine_value(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("cosine: length mismatch " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  if (!(na > kNormEpsilon) || !(nb > kNormEpsilon)) {
    throw DegenerateVectorError("cosine: operand norm <= 1e-12");
  }
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

Tensor cosine(Tape& tape, const Tensor& a, const Tensor& b) {
  require_rank(a, 1, "cosine");
  require_rank(b, 1, "cosine");
  check_input(a, "cosine");
  check_input(b, "cosine");
  const double c = cosine_value(a.data(), b.data());
  const bool rg = wants_grad(tape, {&a, &b});
  Tensor out = make_output({}, {c}, rg, "cosine");
  if (rg) {
    tape.record(out, [a = a, b = b, out]() mutable {
      const double g = out.grad()[0];
      double dot = 0.0, na2 = 0.0, nb2 = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na2 += a[i] * a[i];
        nb2 += b[i] * b[i];
      }
      const double na = std::sqrt(na2), nb = std::sqrt(nb2);
      const double cv = dot / (na * nb);
      if (a.requires_grad()) {
        auto d = a.mutable_grad();
        for (std::size_t i = 0; i < a.size(); ++i)
          d[i] += g * (b[i] / (na * nb) - cv * a[i] / na2);
      }
      if (b.requires_grad()) {
        auto d = b.mutable_grad();
        for (std::size_t i = 0; i < b.size(); ++i)
          d[i] += g * (a[i] / (na * nb) - cv * b[i] / nb2);
      }
    });
  }
  return out;
}

Tensor normalize_rows(Tape& tape, const Tensor& x) {
  require_rank(x, 2, "normalize_rows");
  check_input(x, "normalize_rows");
  const std::size_t m = x.dim(0), n = x.dim(1);
  std::vector<double> norms(m);
  std::vector<double> y(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += x[i * n + j] * x[i * n + j];
    norms[i] = std::sqrt(s);
    if (!(norms[i] > kNormEpsilon)) {
      throw DegenerateVectorError("normalize_rows: row " + std::to_string(i) +
                                  " has norm <= 1e-12");
    }
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] = x[i * n + j] / norms[i];
  }
  const bool rg = wants_grad(tape, {&x});
  Tensor out = make_output({m, n}, std::move(y), rg, "normalize_rows");
  if (rg) {
    tape.record(out, [x = x, out, m, n, norms = std::move(norms)]() mutable {
      const auto G = out.grad();
      const auto Y = out.data();
      auto d = x.mutable_grad();
      for (std::size_t i = 0; i < m; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += G[i * n + j] * Y[i * n + j];
        for (std::size_t j = 0; j < n; ++j)
          d[i * n + j] += (G[i * n + j] - Y[i * n + j] * dot) / norms[i];
      }
    });
  }
  return out;
}

Tensor reshape(Tape& tape, const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw DimensionError("reshape: " + shape_string(x.shape()) + " -> " +
                         shape_string(shape) + " changes element count");
  }
  const bool rg = wants_grad(tape, {&x});
  Tensor out = Tensor::from(std::move(shape), std::vector<double>(x.data().begin(), x.data().end()), rg);
  if (rg) {
    tape.record(out, [x = x, out]() mutable {
      const auto G = out.grad();
      auto d = x.mutable_grad();
      for (std::size_t i = 0; i < G.size(); ++i) d[i] += G[i];
    });
  }
  return out;
}

Tensor gather_rows(Tape& tape, const Tensor& x, std::span<const std::size_t> index) {
  require_rank(x, 2, "gather_rows");
  if (index.empty()) throw DimensionError("gather_rows: empty index");
  const std::size_t m = x.dim(0), n = x.dim(1);
  std::vector<double> y(index.size() * n);
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= m) {
      throw DimensionError("gather_rows: row " + std::to_string(index[r]) +
                           " out of range for " + shape_string(x.shape()));
    }
    std::copy_n(&x.data()[index[r] * n], n, &y[r * n]);
  }
  const bool rg = wants_grad(tape, {&x});
  Tensor out = make_output({index.size(), n}, std::move(y), rg, "gather_rows");
  if (rg) {
    std::vector<std::size_t> idx(index.begin(), index.end());
    tape.record(out, [x = x, out, n, idx = std::move(idx)]() mutable {
      const auto G = out.grad();
      auto d = x.mutable_grad();
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t j = 0; j < n; ++j) d[idx[r] * n + j] += G[r * n + j];
    });
  }
  return out;
}

Tensor scatter_rows(Tape& tape, const Tensor& base, const Tensor& rows,
                    std::span<const std::size_t> index) {
  require_rank(base, 2, "scatter_rows");
  require_rank(rows, 2, "scatter_rows");
  const std::size_t m = base.dim(0), n = base.dim(1);
  if (rows.dim(1) != n || rows.dim(0) != index.size()) {
    throw DimensionError("scatter_rows: rows " + shape_string(rows.shape()) +
                         " incompatible with base " + shape_string(base.shape()) +
                         " and " + std::to_string(index.size()) + " indices");
  }
  std::vector<double> y(base.data().begin(), base.data().end());
  std::vector<char> replaced(m, 0);
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= m) {
      throw DimensionError("scatter_rows: row " + std::to_string(index[r]) +
                           " out of range for " + shape_string(base.shape()));
    }
    if (replaced[index[r]]) throw DimensionError("scatter_rows: duplicate index");
    replaced[index[r]] = 1;
    std::copy_n(&rows.data()[r * n], n, &y[index[r] * n]);
  }
  const bool rg = wants_grad(tape, {&base, &rows});
  Tensor out = make_output({m, n}, std::move(y), rg, "scatter_rows");
  if (rg) {
    std::vector<std::size_t> idx(index.begin(), index.end());
    tape.record(out, [base = base, rows = rows, out, n, idx = std::move(idx), replaced = std::move(replaced)]() mutable {
      const auto G = out.grad();
      if (base.requires_grad()) {
        auto d = base.mutable_grad();
        for (std::size_t i = 0; i < replaced.size(); ++i) {
          if (replaced[i]) continue;
          for (std::size_t j = 0; j < n; ++j) d[i * n + j] += G[i * n + j];
        }
      }
      if (rows.requires_grad()) {
        auto d = rows.mutable_grad();
        for (std::size_t r = 0; r < idx.size(); ++r)
          for (std::size_t j = 0; j < n; ++j) d[r * n + j] += G[idx[r] * n + j];
      }
    });
  }
  return out;
}

Tensor neighbor_mean(Tape& tape, const Tensor& x, std::size_t grid_rows,
                     std::size_t grid_cols) {
  require_rank(x, 2, "neighbor_mean");
  if (x.dim(0) != grid_rows * grid_cols) {
    throw DimensionError("neighbor_mean: " + shape_string(x.shape()) + " is not a " +
                         std::to_string(grid_rows) + "x" + std::to_string(grid_cols) + " grid");
  }
  const std::size_t n = x.dim(1);
  const auto X = x.data();
  std::vector<double> y(x.size(), 0.0);
  std::vector<double> inv_count(grid_rows * grid_cols);
  for (std::size_t r = 0; r < grid_rows; ++r)
    for (std::size_t c = 0; c < grid_cols; ++c) {
      const std::size_t cell = r * grid_cols + c;
      const std::size_t r0 = r ? r - 1 : 0, r1 = std::min(r + 1, grid_rows - 1);
      const std::size_t c0 = c ? c - 1 : 0, c1 = std::min(c + 1, grid_cols - 1);
      inv_count[cell] = 1.0 / static_cast<double>((r1 - r0 + 1) * (c1 - c0 + 1));
      for (std::size_t rr = r0; rr <= r1; ++rr)
        for (std::size_t cc = c0; cc <= c1; ++cc)
          for (std::size_t j = 0; j < n; ++j) y[cell * n + j] += X[(rr * grid_cols + cc) * n + j];
      for (std::size_t j = 0; j < n; ++j) y[cell * n + j] *= inv_count[cell];
    }
  const bool rg = wants_grad(tape, {&x});
  Tensor out = make_output(x.shape(), std::move(y), rg, "neighbor_mean");
  if (rg) {
    tape.record(out, [x = x, out, n, grid_rows, grid_cols, inv_count = std::move(inv_count)]() mutable {
      const auto G = out.grad();
      auto d = x.mutable_grad();
      for (std::size_t r = 0; r < grid_rows; ++r)
        for (std::size_t c = 0; c < grid_cols; ++c) {
          const std::size_t cell = r * grid_cols + c;
          const std::size_t r0 = r ? r - 1 : 0, r1 = std::min(r + 1, grid_rows - 1);
          const std::size_t c0 = c ? c - 1 : 0, c1 = std::min(c + 1, grid_cols - 1);
          for (std::size_t rr = r0; rr <= r1; ++rr)
            for (std::size_t cc = c0; cc <= c1; ++cc)
              for (std::size_t j = 0; j < n; ++j)
                d[(rr * grid_cols + cc) * n + j] += G[cell * n + j] * inv_count[cell];
        }
    });
  }
  return out;
}

Tensor weighted_neg_log(Tape& tape, const Tensor& p, std::span<const double> weights,
                        double floor) {
  if (weights.size() != p.size()) {
    throw DimensionError("weighted_neg_log: " + std::to_string(weights.size()) +
                         " weights for " + shape_string(p.shape()));
  }
  check_input(p, "weighted_neg_log");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (weights[i] != 0.0) total -= weights[i] * std::log(std::max(p[i], floor));
  }
  const bool rg = wants_grad(tape, {&p});
  Tensor out = make_output({}, {total}, rg, "weighted_neg_log");
  if (rg) {
    std::vector<double> w(weights.begin(), weights.end());
    tape.record(out, [p = p, out, floor, w = std::move(w)]() mutable {
      const double g = out.grad()[0];
      auto d = p.mutable_grad();
      for (std::size_t i = 0; i < w.size(); ++i) {
        // Clamped region is flat.
        if (w[i] != 0.0 && p[i] > floor) d[i] -= g * w[i] / p[i];
      }
    });
  }
  return out;
}

}  // namespace mcdrl::ops
