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
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "mcdrl/errors.hpp"
#include "mcdrl/tensor.hpp"

// MCDT tensor files.
//
//   offset  size  field
//   0       4     magic "MCDT"
//   4       1     format version (1)
//   5       1     dtype: 1 = IEEE float32, 2 = IEEE float64
//   6       1     rank (<= 8)
//   7       1     zero pad
//   8       8     element count, little-endian u64
//   16      4*r   dims, little-endian u32, each > 0
//   ...           payload, row-major little-endian
namespace mcdrl {

enum class StoredPrecision : std::uint8_t { kFloat32 = 1, kFloat64 = 2 };

inline constexpr std::size_t kTensorHeaderBytes = 16;
inline constexpr std::uint8_t kTensorFormatVersion = 1;
inline constexpr std::size_t kMaxTensorRank = 8;
inline constexpr std::uint64_t kMaxTensorElements = std::uint64_t{1} << 30;

enum class FormatFault {
  kBadMagic,
  kBadVersion,
  kBadDtype,
  kBadRank,
  kZeroDim,
  kDimOverflow,
  kCountMismatch,
  kTruncated,
  kNonFinite,
};

const char* fault_name(FormatFault fault);

class TensorFormatError : public FormatError {
 public:
  TensorFormatError(FormatFault fault, const std::string& detail);
  FormatFault fault() const { return fault_; }

 private:
  FormatFault fault_;
};

std::size_t encoded_size(const Shape& shape, StoredPrecision precision);

void write_tensor(std::ostream& out, const Tensor& tensor,
                  StoredPrecision precision = StoredPrecision::kFloat64);
// Reads one tensor; throws TensorFormatError on malformed input.
Tensor read_tensor(std::istream& in);

std::string encode_tensor(const Tensor& tensor, StoredPrecision precision = StoredPrecision::kFloat64);
Tensor decode_tensor(std::string_view bytes);

void save_tensor(const std::filesystem::path& path, const Tensor& tensor,
                 StoredPrecision precision = StoredPrecision::kFloat64);
Tensor load_tensor(const std::filesystem::path& path);

}  // namespace mcdrl
