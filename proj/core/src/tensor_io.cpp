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
#include "mcdrl/tensor_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

namespace mcdrl {
namespace {

constexpr std::array<char, 4> kMagic{'M', 'C', 'D', 'T'};

template <typename U>
void put_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes;
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(const unsigned char* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

void read_exact(std::istream& in, void* dst, std::size_t n, const char* what) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw TensorFormatError(FormatFault::kTruncated, std::string("truncated ") + what);
  }
}

std::size_t bytes_per_element(StoredPrecision p) { return p == StoredPrecision::kFloat32 ? 4 : 8; }

}  // namespace

const char* fault_name(FormatFault fault) {
  switch (fault) {
    case FormatFault::kBadMagic: return "bad magic";
    case FormatFault::kBadVersion: return "unsupported version";
    case FormatFault::kBadDtype: return "unknown dtype";
    case FormatFault::kBadRank: return "rank too large";
    case FormatFault::kZeroDim: return "zero dimension";
    case FormatFault::kDimOverflow: return "dimension overflow";
    case FormatFault::kCountMismatch: return "element count mismatch";
    case FormatFault::kTruncated: return "truncated payload";
    case FormatFault::kNonFinite: return "non-finite value";
  }
  return "unknown";
}

TensorFormatError::TensorFormatError(FormatFault fault, const std::string& detail)
    : FormatError(std::string("MCDT ") + fault_name(fault) + ": " + detail), fault_(fault) {}

std::size_t encoded_size(const Shape& shape, StoredPrecision precision) {
  return kTensorHeaderBytes + 4 * shape.size() + shape_size(shape) * bytes_per_element(precision);
}

void write_tensor(std::ostream& out, const Tensor& tensor, StoredPrecision precision) {
  if (!tensor.defined()) throw DimensionError("write_tensor: undefined tensor");
  if (tensor.rank() > kMaxTensorRank) throw DimensionError("write_tensor: rank exceeds 8");
  for (auto d : tensor.shape()) {
    if (d > std::numeric_limits<std::uint32_t>::max()) throw DimensionError("write_tensor: dim exceeds u32");
  }
  out.write(kMagic.data(), kMagic.size());
  out.put(static_cast<char>(kTensorFormatVersion));
  out.put(static_cast<char>(precision));
  out.put(static_cast<char>(tensor.rank()));
  out.put(0);
  put_le<std::uint64_t>(out, tensor.size());
  for (auto d : tensor.shape()) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  for (double v : tensor.data()) {
    if (precision == StoredPrecision::kFloat32) {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    } else {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  if (!out) throw IoError("write_tensor: stream failure");
}

Tensor read_tensor(std::istream& in) {
  std::array<unsigned char, kTensorHeaderBytes> header{};
  read_exact(in, header.data(), header.size(), "header");
  if (std::memcmp(header.data(), kMagic.data(), kMagic.size()) != 0) {
    throw TensorFormatError(FormatFault::kBadMagic, "expected \"MCDT\"");
  }
  if (header[4] != kTensorFormatVersion) {
    throw TensorFormatError(FormatFault::kBadVersion, "version " + std::to_string(header[4]));
  }
  if (header[5] != 1 && header[5] != 2) {
    throw TensorFormatError(FormatFault::kBadDtype, "dtype code " + std::to_string(header[5]));
  }
  const auto precision = static_cast<StoredPrecision>(header[5]);
  const std::size_t rank = header[6];
  if (rank > kMaxTensorRank) throw TensorFormatError(FormatFault::kBadRank, "rank " + std::to_string(rank));
  const auto count = get_le<std::uint64_t>(&header[8]);

  std::vector<unsigned char> dim_bytes(4 * rank);
  if (rank) read_exact(in, dim_bytes.data(), dim_bytes.size(), "dims");
  Shape shape(rank);
  std::uint64_t product = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    const auto d = get_le<std::uint32_t>(&dim_bytes[4 * i]);
    if (d == 0) throw TensorFormatError(FormatFault::kZeroDim, "dim " + std::to_string(i));
    if (product > kMaxTensorElements / d) {
      throw TensorFormatError(FormatFault::kDimOverflow, "element count exceeds 2^30");
    }
    product *= d;
    shape[i] = d;
  }
  if (product != count) {
    throw TensorFormatError(FormatFault::kCountMismatch, "header count " + std::to_string(count) +
                                                             " vs dims " + std::to_string(product));
  }
  const std::size_t width = bytes_per_element(precision);
  std::vector<unsigned char> payload(product * width);
  read_exact(in, payload.data(), payload.size(), "payload");
  std::vector<double> values(product);
  for (std::size_t i = 0; i < product; ++i) {
    const unsigned char* p = &payload[i * width];
    values[i] = precision == StoredPrecision::kFloat32
                    ? static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(p)))
                    : std::bit_cast<double>(get_le<std::uint64_t>(p));
    if (!std::isfinite(values[i])) {
      throw TensorFormatError(FormatFault::kNonFinite, "element " + std::to_string(i));
    }
  }
  return Tensor::from(std::move(shape), std::move(values));
}

std::string encode_tensor(const Tensor& tensor, StoredPrecision precision) {
  std::ostringstream os(std::ios::binary);
  write_tensor(os, tensor, precision);
  return std::move(os).str();
}

Tensor decode_tensor(std::string_view bytes) {
  std::istringstream is(std::string(bytes), std::ios::binary);
  return read_tensor(is);
}

void save_tensor(const std::filesystem::path& path, const Tensor& tensor, StoredPrecision precision) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_tensor(out, tensor, precision);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return read_tensor(in);
}

}  // namespace mcdrl
