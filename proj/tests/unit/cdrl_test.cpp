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
#include "mcdrl/cdrl.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "mcdrl/errors.hpp"
#include "mcdrl/ops.hpp"
#include "mcdrl/rng.hpp"
#include "test_util.hpp"

namespace mcdrl {
namespace {

Tensor identity(std::size_t d) {
  Tensor t = Tensor::zeros({d, d});
  for (std::size_t i = 0; i < d; ++i) t.mutable_data()[i * d + i] = 1.0;
  return t;
}

RegionFeatures region_of(Tensor rows, std::vector<std::size_t> cells, GridShape grid) {
  return RegionFeatures{std::move(rows), std::move(cells), grid};
}

// Explicit sum over dictionary entries with scalar loops.
std::vector<double> attention_oracle(const Tensor& f, const Tensor& z, const Tensor& wk, const Tensor& wv) {
  const std::size_t n = f.dim(0), m = z.dim(0), d = z.dim(1);
  auto project = [&](const Tensor& w, std::size_t entry, std::size_t j) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) s += z.at(entry, i) * w.at(i, j);
    return s;
  };
  std::vector<double> out(n * d, 0.0);
  for (std::size_t q = 0; q < n; ++q) {
    std::vector<double> logits(m);
    for (std::size_t e = 0; e < m; ++e) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += f.at(q, j) * project(wk, e, j);
      logits[e] = s / std::sqrt(static_cast<double>(d));
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double norm = 0.0;
    for (double& l : logits) norm += (l = std::exp(l - top));
    for (std::size_t e = 0; e < m; ++e)
      for (std::size_t j = 0; j < d; ++j) out[q * d + j] += logits[e] / norm * project(wv, e, j);
  }
  return out;
}

TEST(DictionaryTest, DefaultPrompts) {
  TextEncoder enc(16, 2024);
  ConfounderDictionary a = init_dictionary(default_confounder_prompts(), enc, 3);
  ConfounderDictionary b = init_dictionary(default_confounder_prompts(), enc, 3);
  EXPECT_EQ(a.entries.shape(), (Shape{12, 16}));
  EXPECT_EQ(testing::values(a.entries), testing::values(b.entries));
  EXPECT_EQ(testing::values(a.key_proj), testing::values(b.key_proj));
  EXPECT_FALSE(a.entries.requires_grad());
  EXPECT_TRUE(a.key_proj.requires_grad());
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = i + 1; j < 12; ++j) {
      std::vector<double> u(16), v(16);
      for (std::size_t k = 0; k < 16; ++k) u[k] = a.entries.at(i, k), v[k] = a.entries.at(j, k);
      EXPECT_LT(ops::cosine_value(u, v), 0.999);
    }
}

TEST(DictionaryTest, ContractErrors) {
  TextEncoder enc(16, 2024);
  std::vector<std::string> eleven(default_confounder_prompts().begin(), default_confounder_prompts().end() - 1);
  EXPECT_THROW(init_dictionary(eleven, enc, 1), ParameterError);
  std::vector<std::string> dup = default_confounder_prompts();
  dup[3] = dup[0];
  EXPECT_THROW(init_dictionary(dup, enc, 1), ParameterError);
  std::vector<std::string> empty = default_confounder_prompts();
  empty[5] = "";
  EXPECT_THROW(init_dictionary(empty, enc, 1), ParameterError);
}

TEST(DictionaryTest, ShippedPromptFileMatchesDefaults) {
  EXPECT_EQ(load_prompts(std::filesystem::path(MCDRL_DATA_DIR) / "confounder_prompts.txt"),
            default_confounder_prompts());
  EXPECT_EQ(confounder_descriptor("An endoscopy image with dim lighting"), "dim lighting");
  EXPECT_EQ(confounder_descriptor("glare"), "glare");
}

TEST(DictionaryTest, ShortPromptFileRejected) {
  const auto path = std::filesystem::temp_directory_path() / "mcdrl_short_prompts.txt";
  {
    std::ofstream out(path);
    out << "one\ntwo\n";
  }
  EXPECT_THROW(load_prompts(path), FormatError);
  std::filesystem::remove(path);
}

TEST(InterveneTest, SingleEntryDictionary) {
  Tape tape;
  Rng rng(4);
  Tensor z = testing::random_tensor({1, 3}, rng, -2, 2, false);
  Tensor wv = testing::random_tensor({3, 3}, rng);
  ConfounderDictionary dict = make_dictionary(z, testing::random_tensor({3, 3}, rng), wv);
  IntervenedFeatures out = intervene(tape, region_of(testing::random_tensor({4, 3}, rng), {0, 1, 2, 3}, {2, 2}), dict);
  std::vector<double> fv(3, 0.0);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 3; ++i) fv[j] += z[i] * wv.at(i, j);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(out.rows.at(r, j), fv[j], 1e-14);
}

TEST(InterveneTest, TwoEntryExample) {
  Tape tape;
  ConfounderDictionary dict = make_dictionary(Tensor::from({2, 2}, {1, 0, 0, 1}), identity(2), identity(2));
  IntervenedFeatures out = intervene(tape, region_of(Tensor::from({1, 2}, {1, 0}), {0}, {1, 1}), dict);
  const double w0 = 1.0 / (1.0 + std::exp(-1.0 / std::sqrt(2.0)));
  EXPECT_NEAR(out.attention[0], w0, 1e-15);
  EXPECT_NEAR(out.rows[0], 0.670, 5e-4);
  EXPECT_NEAR(out.rows[1], 0.330, 5e-4);
  EXPECT_NEAR(out.rows[0] + out.rows[1], 1.0, 1e-15);
}

TEST(InterveneTest, MatchesExplicitSumAndIgnoresEntryOrder) {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(8), m = 1 + rng.below(12), d = 1 + rng.below(16);
    Tensor f = testing::random_tensor({n, d}, rng);
    Tensor z = testing::random_tensor({m, d}, rng, -2, 2, false);
    Tensor wk = testing::random_tensor({d, d}, rng), wv = testing::random_tensor({d, d}, rng);
    std::vector<std::size_t> cells(n);
    std::iota(cells.begin(), cells.end(), 0);
    Tape tape;
    IntervenedFeatures out = intervene(tape, region_of(f, cells, {1, n}), make_dictionary(z, wk, wv));
    const std::vector<double> expect = attention_oracle(f, z, wk, wv);
    for (std::size_t i = 0; i < expect.size(); ++i) ASSERT_NEAR(out.rows[i], expect[i], 1e-10);

    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = m; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    Tensor zp = Tensor::zeros({m, d});
    for (std::size_t e = 0; e < m; ++e)
      for (std::size_t j = 0; j < d; ++j) zp.mutable_data()[e * d + j] = z.at(perm[e], j);
    IntervenedFeatures permuted = intervene(tape, region_of(f, cells, {1, n}), make_dictionary(zp, wk, wv));
    for (std::size_t i = 0; i < expect.size(); ++i) ASSERT_NEAR(permuted.rows[i], out.rows[i], 1e-12);
  }
}

TEST(InterveneTest, DimensionMismatch) {
  Tape tape;
  ConfounderDictionary dict = make_dictionary(Tensor::full({2, 3}, 1.0), identity(3), identity(3));
  EXPECT_THROW(intervene(tape, region_of(Tensor::zeros({1, 2}), {0}, {1, 1}), dict), DimensionError);
}

TEST(ScatterTest, FullSelectionIgnoresFallback) {
  Tape tape;
  FeatureMap fallback{Tensor::full({4, 2}, 9.0), {2, 2}};
  IntervenedFeatures rows{Tensor::from({4, 2}, {1, 2, 3, 4, 5, 6, 7, 8}), {}, {0, 1, 2, 3}, {2, 2}};
  EXPECT_EQ(testing::values(scatter(tape, rows, fallback).features), testing::values(rows.rows));
}

TEST(ScatterTest, BypassReproducesFallback) {
  Tape tape;
  FeatureMap map{Tensor::from({4, 2}, {1, 2, 3, 4, 5, 6, 7, 8}), {2, 2}};
  SelectionMask m = select(Tensor::from({2, 2}, {0.9, 0.1, 0.5, 0.7}), 0.5);
  IntervenedFeatures same = bypass(extract(tape, map, m));
  EXPECT_EQ(testing::values(scatter(tape, same, map).features), testing::values(map.features));
}

TEST(ScatterTest, TwoOfFourCellsChange) {
  Tape tape;
  FeatureMap map{Tensor::from({4, 2}, {1, 2, 3, 4, 5, 6, 7, 8}), {2, 2}};
  IntervenedFeatures rows{Tensor::from({2, 2}, {-1, -1, -2, -2}), {}, {0, 3}, {2, 2}};
  FeatureMap out = scatter(tape, rows, map);
  EXPECT_EQ(testing::values(out.features), (std::vector<double>{-1, -1, 3, 4, 5, 6, -2, -2}));
}

TEST(DecoderTest, ZeroWeightsGiveUniform) {
  DecoderHead head(4, 5, 1);
  std::fill(head.weight().mutable_data().begin(), head.weight().mutable_data().end(), 0.0);
  std::fill(head.bias().mutable_data().begin(), head.bias().mutable_data().end(), 0.0);
  Tape tape(Tape::Mode::kInference);
  Rng rng(2);
  PredictionMap p = head.decode(tape, FeatureMap{testing::random_tensor({6, 4}, rng), {2, 3}});
  EXPECT_EQ(p.channels(), 6u);
  for (double v : p.probs.data()) EXPECT_NEAR(v, 1.0 / 6.0, 1e-15);
}

TEST(DecoderTest, RowsAreDistributions) {
  DecoderHead head(4, 3, 7);
  Tape tape(Tape::Mode::kInference);
  Rng rng(3);
  PredictionMap p = head.decode(tape, FeatureMap{testing::random_tensor({9, 4}, rng), {3, 3}});
  for (std::size_t c = 0; c < 9; ++c) {
    double s = 0.0;
    for (std::size_t k = 0; k < 4; ++k) s += p.probs.at(c, k);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(DecoderTest, LabelsReplicatedPerPatch) {
  PredictionMap p{Tensor::from({2, 3}, {0.1, 0.7, 0.2, 0.5, 0.2, 0.3}), {1, 2}};
  LabelMap labels = predict_labels(p, 2);
  EXPECT_EQ(labels.height, 2u);
  EXPECT_EQ(labels.width, 4u);
  EXPECT_EQ(labels.labels, (std::vector<std::uint8_t>{1, 1, 0, 0, 1, 1, 0, 0}));
}

}  // namespace
}  // namespace mcdrl
