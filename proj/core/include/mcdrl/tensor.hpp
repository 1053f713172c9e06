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
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mcdrl {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of 64-bit reals with an optional gradient buffer.
///
/// Tensor is a handle: copies share storage, so a parameter captured by a
/// tape record and the same parameter held by a model refer to one buffer.
/// A rank-0 tensor (empty shape) is a scalar holding one value.
class Tensor {
 public:
  Tensor();

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;

  std::span<const double> data() const;
  // Direct write access; used by initializers and optimizer steps only.
  std::span<double> mutable_data();
  double operator[](std::size_t i) const { return data()[i]; }
  double at(std::size_t row, std::size_t col) const;
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool value);

  bool has_grad() const;
  std::span<const double> grad() const;
  // Allocates a zero gradient on first access.
  std::span<double> mutable_grad();
  void clear_grad();

  // Deep copy with no gradient and requires_grad = false.
  Tensor detach() const;
  bool same_storage(const Tensor& other) const { return storage_ == other.storage_; }
  bool defined() const { return storage_ != nullptr; }

 private:
  struct Storage {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
  };
  explicit Tensor(std::shared_ptr<Storage> storage);

  std::shared_ptr<Storage> storage_;
};

// Throws NumericError if any entry is NaN or Inf.
void check_finite(const Tensor& t, const char* where);

/// Ordered record of differentiable operations.
///
/// Operations append one record per call when any input requires a gradient.
/// backward() replays the records in reverse exactly once; the tape is then
/// spent and must be cleared before reuse.
class Tape {
 public:
  enum class Mode { kRecord, kInference };

  explicit Tape(Mode mode = Mode::kRecord) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return mode_ == Mode::kRecord; }

  // Propagates the output gradient into the inputs. Called at most once.
  using BackwardFn = std::function<void()>;
  void record(const Tensor& output, BackwardFn backward);

  void backward(const Tensor& loss);
  void clear();

  std::size_t size() const { return records_.size(); }
  bool consumed() const { return consumed_; }

 private:
  struct Record {
    Tensor output;
    BackwardFn backward;
  };
  Mode mode_;
  std::vector<Record> records_;
  bool consumed_ = false;
};

}  // namespace mcdrl
