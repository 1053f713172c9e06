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
#include "mcdrl/encoders.hpp"

#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mcdrl/errors.hpp"
#include "mcdrl/ops.hpp"
#include "mcdrl/rng.hpp"
#include "test_util.hpp"

namespace mcdrl {
namespace {

Image random_image(std::size_t h, std::size_t w, Rng& rng) {
  Image img(h, w);
  for (double& v : img.pixels) v = rng.uniform();
  return img;
}

TEST(VisionEncoderTest, GridShape) {
  VisionEncoder enc({4, 16, true}, 1);
  Tape tape(Tape::Mode::kInference);
  Image img(32, 32, 0.5);
  FeatureMap map = enc.encode(tape, img);
  EXPECT_EQ(map.grid, (GridShape{8, 8}));
  EXPECT_EQ(map.features.shape(), (Shape{64, 16}));
}

TEST(VisionEncoderTest, RejectsBadInput) {
  VisionEncoder enc({4, 16, true}, 1);
  Tape tape(Tape::Mode::kInference);
  EXPECT_THROW(enc.encode(tape, Image(30, 32)), DimensionError);
  Image img(8, 8, 0.2);
  img.pixels[5] = 1.5;
  EXPECT_THROW(enc.encode(tape, img), ParameterError);
}

TEST(VisionEncoderTest, ZeroImageIsConstantMap) {
  VisionEncoder enc({4, 8, true}, 3);
  Tape tape(Tape::Mode::kInference);
  FeatureMap map = enc.encode(tape, Image(16, 16));
  for (std::size_t c = 1; c < map.grid.cells(); ++c)
    for (std::size_t j = 0; j < map.dim(); ++j) EXPECT_NEAR(map.features.at(c, j), map.features.at(0, j), 1e-14);
}

TEST(VisionEncoderTest, PerturbationStaysInReceptiveField) {
  Rng rng(8);
  VisionEncoder enc({4, 8, true}, 5);
  Tape tape(Tape::Mode::kInference);
  Image a = random_image(24, 24, rng);
  Image b = a;
  // Touch one pixel of patch (2, 3).
  b.at(9, 13, 1) = 1.0 - b.at(9, 13, 1);
  FeatureMap fa = enc.encode(tape, a), fb = enc.encode(tape, b);
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t c = 0; c < 6; ++c) {
      const bool inside = std::abs(static_cast<int>(r) - 2) <= 1 && std::abs(static_cast<int>(c) - 3) <= 1;
      bool differs = false;
      for (std::size_t j = 0; j < 8; ++j)
        differs |= fa.features.at(r * 6 + c, j) != fb.features.at(r * 6 + c, j);
      if (!inside) EXPECT_FALSE(differs) << r << "," << c;
      if (r == 2 && c == 3) EXPECT_TRUE(differs);
    }
  }
}

TEST(VisionEncoderTest, SameSeedSameWeights) {
  VisionEncoder a({4, 8, true}, 9), b({4, 8, true}, 9), c({4, 8, true}, 10);
  EXPECT_EQ(testing::values(a.parameters()[0].tensor), testing::values(b.parameters()[0].tensor));
  EXPECT_NE(testing::values(a.parameters()[0].tensor), testing::values(c.parameters()[0].tensor));
}

TEST(PoolImageTest, Means) {
  Tape tape;
  FeatureMap two{Tensor::from({2, 2}, {1, 0, 0, 1}), {1, 2}};
  EXPECT_EQ(testing::values(pool_image(tape, two)), (std::vector<double>{0.5, 0.5}));
  FeatureMap constant{Tensor::full({6, 3}, -0.25), {2, 3}};
  EXPECT_EQ(testing::values(pool_image(tape, constant)), (std::vector<double>{-0.25, -0.25, -0.25}));

  Rng rng(2);
  FeatureMap random{testing::random_tensor({12, 5}, rng), {3, 4}};
  Tensor pooled = pool_image(tape, random);
  for (std::size_t j = 0; j < 5; ++j) {
    double s = 0.0;
    for (std::size_t c = 0; c < 12; ++c) s += random.features.at(c, j);
    EXPECT_NEAR(pooled[j], s / 12.0, 1e-14);
  }
}

TEST(TextEncoderTest, DeterministicUnitNorm) {
  TextEncoder enc(16, 2024);
  Tensor a = enc.encode("A Polyps in an endoscopic image");
  Tensor b = enc.encode("A Polyps in an endoscopic image");
  EXPECT_EQ(testing::values(a), testing::values(b));
  double n = 0.0;
  for (double v : a.data()) n += v * v;
  EXPECT_NEAR(n, 1.0, 1e-12);
  EXPECT_THROW(enc.encode(""), ParameterError);
  EXPECT_THROW(enc.encode("  ,. "), ParameterError);
}

TEST(TextEncoderTest, TokenizerLowercases) {
  EXPECT_EQ(tokenize("A Polyps, in-view!"), (std::vector<std::string>{"a", "polyps", "in", "view"}));
  TextEncoder enc(8, 1);
  EXPECT_EQ(testing::values(enc.encode("Cyst")), testing::values(enc.encode("cyst")));
}

TEST(TextEncoderTest, ClassPromptsSeparated) {
  TextEncoder enc(16, 2024);
  Tensor e = class_embeddings(enc, default_class_names());
  ASSERT_EQ(e.shape(), (Shape{5, 16}));
  EXPECT_EQ(class_prompt("Cyst"), "A Cyst in an endoscopic image");
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j) {
      std::vector<double> a(16), b(16);
      for (std::size_t k = 0; k < 16; ++k) a[k] = e.at(i, k), b[k] = e.at(j, k);
      EXPECT_LT(ops::cosine_value(a, b), kClassSeparationLimit);
    }
}

TEST(TextEncoderTest, DuplicateClassesRejected) {
  TextEncoder enc(16, 2024);
  const std::vector<std::string> names{"Cyst", "cyst"};
  EXPECT_THROW(class_embeddings(enc, names), ParameterError);
}

}  // namespace
}  // namespace mcdrl
