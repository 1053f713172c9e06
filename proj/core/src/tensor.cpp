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
#include "mcdrl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mcdrl/errors.hpp"

namespace mcdrl {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void validate_shape(const Shape& shape) {
  for (auto d : shape) {
    if (d == 0) {
      throw DimensionError("tensor dimensions must be positive, got " +
                           shape_string(shape));
    }
  }
}

}  // namespace

Tensor::Tensor() = default;

Tensor::Tensor(std::shared_ptr<Storage> storage) : storage_(std::move(storage)) {}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  validate_shape(shape);
  auto s = std::make_shared<Storage>();
  s->data.assign(shape_size(shape), value);
  s->shape = std::move(shape);
  s->requires_grad = requires_grad;
  return Tensor(std::move(s));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  validate_shape(shape);
  if (values.size() != shape_size(shape)) {
    throw DimensionError("value count " + std::to_string(values.size()) +
                         " does not match shape " + shape_string(shape));
  }
  auto s = std::make_shared<Storage>();
  s->shape = std::move(shape);
  s->data = std::move(values);
  s->requires_grad = requires_grad;
  return Tensor(std::move(s));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

const Shape& Tensor::shape() const {
  static const Shape kEmpty;
  return storage_ ? storage_->shape : kEmpty;
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= rank()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " +
                         shape_string(shape()));
  }
  return storage_->shape[axis];
}

std::size_t Tensor::size() const { return storage_ ? storage_->data.size() : 0; }

std::span<const double> Tensor::data() const {
  if (!storage_) return {};
  return storage_->data;
}

std::span<double> Tensor::mutable_data() {
  if (!storage_) return {};
  return storage_->data;
}

double Tensor::at(std::size_t row, std::size_t col) const {
  if (rank() != 2) throw DimensionError("at(row, col) needs a rank-2 tensor");
  return storage_->data[row * storage_->shape[1] + col];
}

double Tensor::item() const {
  if (size() != 1) {
    throw DimensionError("item() on tensor of shape " + shape_string(shape()));
  }
  return storage_->data[0];
}

bool Tensor::requires_grad() const { return storage_ && storage_->requires_grad; }

void Tensor::set_requires_grad(bool value) {
  if (storage_) storage_->requires_grad = value;
}

bool Tensor::has_grad() const { return storage_ && !storage_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!storage_) return {};
  return storage_->grad;
}

std::span<double> Tensor::mutable_grad() {
  if (!storage_) return {};
  if (storage_->grad.empty()) storage_->grad.assign(storage_->data.size(), 0.0);
  return storage_->grad;
}

void Tensor::clear_grad() {
  if (storage_) {
    storage_->grad.clear();
    storage_->grad.shrink_to_fit();
  }
}

Tensor Tensor::detach() const {
  if (!storage_) return {};
  return from(storage_->shape, storage_->data, false);
}

void check_finite(const Tensor& t, const char* where) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(where) + ": non-finite value in tensor " +
                         shape_string(t.shape()));
    }
  }
}

void Tape::record(const Tensor& output, BackwardFn backward) {
  if (!recording()) return;
  if (consumed_) throw StateError("tape already consumed by backward(); clear() it first");
  records_.push_back(Record{output, std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  if (consumed_) throw StateError("backward() called twice on the same tape");
  if (loss.size() != 1 || loss.rank() != 0) {
    throw DimensionError("backward() needs a scalar loss, got " +
                         shape_string(loss.shape()));
  }
  const bool on_tape =
      loss.requires_grad() &&
      std::any_of(records_.begin(), records_.end(),
                  [&](const Record& r) { return r.output.same_storage(loss); });
  if (!on_tape) throw StateError("backward() on a loss detached from this tape");

  Tensor seed = loss;
  seed.mutable_grad()[0] += 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    // Outputs the loss never reached carry no gradient to push.
    if (it->output.has_grad()) it->backward();
  }
  consumed_ = true;
}

void Tape::clear() {
  records_.clear();
  consumed_ = false;
}

}  // namespace mcdrl
