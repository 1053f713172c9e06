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

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <string>

#include <gtest/gtest.h>

#include "mcdrl/rng.hpp"
#include "test_util.hpp"

namespace mcdrl {
namespace {

FormatFault fault_of(const std::string& bytes) {
  try {
    decode_tensor(bytes);
  } catch (const TensorFormatError& e) {
    return e.fault();
  }
  ADD_FAILURE() << "decode accepted malformed bytes";
  return FormatFault::kBadMagic;
}

void put_u32(std::string& s, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s[at + i] = static_cast<char>((v >> (8 * i)) & 0xff);
}

void put_u64(std::string& s, std::size_t at, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) s[at + i] = static_cast<char>((v >> (8 * i)) & 0xff);
}

TEST(TensorIoTest, RoundTripFloat64IsBitExact) {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    Shape shape;
    for (std::size_t r = 0, rank = rng.below(4) + 1; r < rank; ++r) shape.push_back(1 + rng.below(5));
    Tensor x = testing::random_tensor(shape, rng, -1e3, 1e3, false);
    Tensor y = decode_tensor(encode_tensor(x));
    EXPECT_EQ(y.shape(), x.shape());
    EXPECT_EQ(std::memcmp(x.data().data(), y.data().data(), x.size() * sizeof(double)), 0);
  }
}

TEST(TensorIoTest, RoundTripFloat32AtStoredPrecision) {
  Rng rng(2);
  Tensor x = testing::random_tensor({3, 7}, rng, -5, 5, false);
  Tensor y = decode_tensor(encode_tensor(x, StoredPrecision::kFloat32));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y[i], static_cast<double>(static_cast<float>(x[i])));
  const std::string again = encode_tensor(y, StoredPrecision::kFloat32);
  EXPECT_EQ(again, encode_tensor(x, StoredPrecision::kFloat32));
}

TEST(TensorIoTest, RankZeroScalar) {
  Tensor y = decode_tensor(encode_tensor(Tensor::scalar(-2.5)));
  EXPECT_EQ(y.rank(), 0u);
  EXPECT_EQ(y.item(), -2.5);
}

TEST(TensorIoTest, FileSizeArithmetic) {
  const auto path = std::filesystem::temp_directory_path() / "mcdrl_size_check.mcdt";
  save_tensor(path, Tensor::zeros({8, 8, 16}), StoredPrecision::kFloat32);
  EXPECT_EQ(std::filesystem::file_size(path), 16u + 12u + 8u * 8u * 16u * 4u);
  EXPECT_EQ(encoded_size({8, 8, 16}, StoredPrecision::kFloat64), 16u + 12u + 8u * 8u * 16u * 8u);
  EXPECT_EQ(load_tensor(path).shape(), (Shape{8, 8, 16}));
  std::filesystem::remove(path);
  EXPECT_THROW(load_tensor(path), IoError);
}

TEST(TensorIoTest, HeaderLayout) {
  const std::string b = encode_tensor(Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(b.substr(0, 4), "MCDT");
  EXPECT_EQ(b[4], 1);
  EXPECT_EQ(b[5], 2);
  EXPECT_EQ(b[6], 2);
  EXPECT_EQ(b[7], 0);
  EXPECT_EQ(static_cast<unsigned char>(b[8]), 6);
  EXPECT_EQ(static_cast<unsigned char>(b[16]), 2);
  EXPECT_EQ(static_cast<unsigned char>(b[20]), 3);
}

TEST(TensorIoTest, MalformedHeadersHaveSpecificFaults) {
  const std::string good = encode_tensor(Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}));
  std::string s = good;
  s[0] = 'X';
  EXPECT_EQ(fault_of(s), FormatFault::kBadMagic);
  s = good, s[4] = 2;
  EXPECT_EQ(fault_of(s), FormatFault::kBadVersion);
  s = good, s[5] = 3;
  EXPECT_EQ(fault_of(s), FormatFault::kBadDtype);
  s = good, s[5] = 0;
  EXPECT_EQ(fault_of(s), FormatFault::kBadDtype);
  s = good, s[6] = 9;
  EXPECT_EQ(fault_of(s), FormatFault::kBadRank);
  s = good, put_u32(s, 16, 0);
  EXPECT_EQ(fault_of(s), FormatFault::kZeroDim);
  s = good, put_u32(s, 16, 1u << 20), put_u32(s, 20, 1u << 20);
  EXPECT_EQ(fault_of(s), FormatFault::kDimOverflow);
  s = good, put_u64(s, 8, 7);
  EXPECT_EQ(fault_of(s), FormatFault::kCountMismatch);
  EXPECT_EQ(fault_of(good.substr(0, good.size() - 1)), FormatFault::kTruncated);
  EXPECT_EQ(fault_of(good.substr(0, 10)), FormatFault::kTruncated);
  EXPECT_EQ(fault_of(good.substr(0, 18)), FormatFault::kTruncated);
  EXPECT_EQ(fault_of(""), FormatFault::kTruncated);
  s = good;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::memcpy(&s[24 + 8], &nan, sizeof nan);
  EXPECT_EQ(fault_of(s), FormatFault::kNonFinite);
}

TEST(TensorIoTest, RandomByteFlipsNeverCrash) {
  Rng rng(5);
  const std::string good = encode_tensor(Tensor::from({2, 2}, {1, 2, 3, 4}));
  for (int t = 0; t < 2000; ++t) {
    std::string s = good;
    const std::size_t at = rng.below(24);
    s[at] = static_cast<char>(rng.below(256));
    try {
      Tensor y = decode_tensor(s.substr(0, rng.below(s.size() + 1)));
      EXPECT_LE(y.size(), 4u);
    } catch (const TensorFormatError&) {
    }
  }
}

}  // namespace
}  // namespace mcdrl
