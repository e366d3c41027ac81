// Copyright 2026 The MCSE Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "mcse/model.hpp"
#include "mcse/random.hpp"
#include "test_support.hpp"

namespace mcse {
namespace {

ModelDims small_dims() {
  ModelDims d;
  d.embed_dim = 6;
  d.shared_dim = 3;
  d.image_dim = 5;
  d.vocab_size = 50;
  return d;
}

TEST(Random, DeriveSeedSeparatesTags) {
  EXPECT_EQ(derive_seed(1, {2, 3}), derive_seed(1, {2, 3}));
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
  EXPECT_NE(derive_seed(1, {2}), derive_seed(2, {2}));
}

TEST(Random, ShuffleIsSeededPermutation) {
  std::vector<int> a(100), b;
  for (int i = 0; i < 100; ++i) a[i] = i;
  b = a;
  Rng r1(11), r2(11);
  seeded_shuffle(a.begin(), a.end(), r1);
  seeded_shuffle(b.begin(), b.end(), r2);
  EXPECT_EQ(a, b);
  std::set<int> seen(a.begin(), a.end());
  EXPECT_EQ(seen.size(), 100u);
}

TEST(Random, UniformRanges) {
  Rng rng(12);
  for (int i = 0; i < 10000; ++i) {
    const double u = uniform01(rng);
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(uniform_index(rng, 7), 7u);
  }
}

TEST(Tokenize, CaseFoldingAndDeterminism) {
  EXPECT_EQ(tokenize("A man runs", 4096), tokenize("a man runs", 4096));
  EXPECT_EQ(tokenize("a man runs", 4096), tokenize("a man runs", 4096));
  EXPECT_EQ(tokenize("a man runs", 4096).size(), 3u);
  EXPECT_EQ(tokenize("a, man. runs!", 4096), tokenize("a man runs", 4096));
  for (auto id : tokenize("the quick brown fox jumps", 17)) {
    EXPECT_GE(id, 0);
    EXPECT_LT(id, 17);
  }
}

TEST(Tokenize, EmptyIsError) {
  EXPECT_THROW(tokenize("", 4096), DataError);
  EXPECT_THROW(tokenize("   \t ", 4096), DataError);
  EXPECT_THROW(tokenize("...", 4096), DataError);
}

TEST(Encoder, MeanPoolWithoutDropout) {
  const auto params = ModelParams::init(small_dims(), 1);
  const TokenIds tokens = {3, 7, 7};
  const VectorXs expected = (params.value.embed.row(3) + 2 * params.value.embed.row(7)).transpose() / 3.0;
  const auto pooled = encode_sentence(tokens, params, DropoutMask::identity(6));
  EXPECT_NEAR((pooled - expected).norm(), 0.0, 1e-15);
  EXPECT_EQ(encode_sentence({4}, params, DropoutMask::identity(6)), VectorXs(params.value.embed.row(4).transpose()));
  EXPECT_EQ(encode_sentence(tokens, params, DropoutMask::sample(6, 0.5, 3)),
            encode_sentence(tokens, params, DropoutMask::sample(6, 0.5, 3)));
  EXPECT_EQ(embed_for_eval(tokens, params), mean_pool(tokens, params));
  EXPECT_THROW(mean_pool({}, params), NumericError);
}

TEST(Encoder, DropoutMasksDifferAndScale) {
  const auto a = DropoutMask::for_instance(64, 0.9, 5, 10, 0);
  const auto b = DropoutMask::for_instance(64, 0.9, 5, 10, 1);
  EXPECT_NE(a.keep_flags(), b.keep_flags());
  for (Index i = 0; i < a.dim(); ++i) {
    EXPECT_EQ(a.scale()(i), a.keep_flags()[static_cast<std::size_t>(i)] ? 1.0 / 0.9 : 0.0);
  }
  const auto params = ModelParams::init(ModelDims{64, 3, 5, 50}, 2);
  EXPECT_NE(encode_sentence({1, 2}, params, a), encode_sentence({1, 2}, params, b));
  EXPECT_EQ(DropoutMask::sample(8, 1.0, 99).scale(), VectorXs::Ones(8));
}

TEST(Heads, Examples) {
  auto params = ModelParams::init(small_dims(), 3);
  params.value.textual.weight.setZero();
  params.value.textual.bias.setZero();
  VectorXs x = VectorXs::LinSpaced(6, -1, 1);
  EXPECT_EQ(project(HeadKind::kTextual, params, x), VectorXs::Zero(6));

  params.value.textual.weight = MatrixXs::Identity(6, 6);
  x.setZero();
  x(0) = 10.0;
  const auto h = project(HeadKind::kTextual, params, x);
  EXPECT_NEAR(h(0), 1.0, 1e-8);
  EXPECT_EQ(h.tail(5), VectorXs::Zero(5));

  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    VectorXs t(6), v(5);
    for (Index i = 0; i < 6; ++i) t(i) = standard_normal(rng);
    for (Index i = 0; i < 5; ++i) v(i) = standard_normal(rng);
    EXPECT_NEAR(project(HeadKind::kSharedText, params, t).norm(), 1.0, 1e-12);
    EXPECT_NEAR(project(HeadKind::kSharedImage, params, v).norm(), 1.0, 1e-12);
  }
  EXPECT_THROW(project(HeadKind::kSharedImage, params, VectorXs::Ones(6)), NumericError);
}

TEST(Params, InitIsSeededAndBounded) {
  const auto a = ModelParams::init(small_dims(), 5);
  const auto b = ModelParams::init(small_dims(), 5);
  const auto c = ModelParams::init(small_dims(), 6);
  EXPECT_EQ(a.value.embed, b.value.embed);
  EXPECT_NE(a.value.embed, c.value.embed);
  for (auto t : a.value.tensors()) {
    for (double x : t) {
      EXPECT_GE(x, -0.1);
      EXPECT_LE(x, 0.1);
    }
  }
  for (auto t : a.grad.tensors()) {
    for (double x : t) EXPECT_EQ(x, 0.0);
  }
  EXPECT_EQ(a.value.tensors().size(), ParamSet::tensor_names().size());
}

TEST(Features, RoundTripAndErrors) {
  const auto dir = testing::scratch_dir("features");
  FeatureTable table(3);
  VectorXs v(3);
  v << 0.1, -2.5e-7, 1.0 / 3.0;
  table.add({"img_a", v});
  table.add({"img_b", -v});
  EXPECT_THROW(table.add({"img_a", v}), DataError);
  EXPECT_THROW(table.add({"img_c", VectorXs::Ones(2)}), DataError);
  EXPECT_THROW(table.at("missing"), DataError);

  write_feature_file(dir / "f.txt", table);
  const auto back = read_feature_file(dir / "f.txt");
  EXPECT_EQ(back.dim(), 3);
  EXPECT_EQ(back.size(), 2u);
  EXPECT_EQ(back.at("img_a").vector, v);
  EXPECT_EQ(back.at("img_b").vector, -v);

  std::ofstream(dir / "bad.txt") << "# d_v=3\nimg\t1,2\n";
  EXPECT_THROW(read_feature_file(dir / "bad.txt"), DataError);
  std::ofstream(dir / "nan.txt") << "# d_v=2\nimg\t1,nan\n";
  EXPECT_THROW(read_feature_file(dir / "nan.txt"), DataError);
  EXPECT_THROW(read_feature_file(dir / "absent.txt"), DataError);
}

}  // namespace
}  // namespace mcse
