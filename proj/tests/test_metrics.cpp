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

#include <cmath>
#include <fstream>

#include "mcse/metrics.hpp"
#include "test_support.hpp"

namespace mcse {
namespace {

VectorXs vec(std::initializer_list<double> xs) {
  VectorXs v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

VectorXs random_unit(Rng& rng, Index n) {
  VectorXs v(n);
  for (Index i = 0; i < n; ++i) v(i) = standard_normal(rng);
  return v.normalized();
}

TEST(Alignment, Examples) {
  const auto a = vec({1, 0}), b = vec({0, 1});
  EXPECT_EQ(alignment_loss({{a, a}, {b, b}}), 0.0);
  EXPECT_NEAR(alignment_loss({{a, b}}), 2.0, 1e-9);
  EXPECT_NEAR(alignment_loss({{a, -a}}), 4.0, 1e-12);
  EXPECT_THROW(alignment_loss({}), NumericError);
  EXPECT_THROW(alignment_loss({{a, vec({0, 0})}}), NumericError);
}

TEST(Uniformity, Examples) {
  const auto a = vec({1, 0});
  EXPECT_EQ(uniformity_loss({a, a}), 0.0);
  EXPECT_NEAR(uniformity_loss({a, -a}), -8.0, 1e-9);
  EXPECT_EQ(uniformity_loss({a, a, a, a, a}), 0.0);
  EXPECT_THROW(uniformity_loss({a}), NumericError);
}

TEST(AlignmentUniformity, OrderInvarianceAndRanges) {
  Rng rng(1);
  std::vector<VectorXs> pts;
  std::vector<std::pair<VectorXs, VectorXs>> pairs;
  for (int i = 0; i < 40; ++i) {
    pts.push_back(random_unit(rng, 5));
    pairs.emplace_back(random_unit(rng, 5), random_unit(rng, 5));
  }
  const double u = uniformity_loss(pts), al = alignment_loss(pairs);
  EXPECT_LE(u, 0.0);
  EXPECT_GE(al, 0.0);
  EXPECT_LE(al, 4.0);
  std::reverse(pts.begin(), pts.end());
  seeded_shuffle(pairs.begin(), pairs.end(), rng);
  EXPECT_NEAR(uniformity_loss(pts), u, 1e-12);
  EXPECT_NEAR(alignment_loss(pairs), al, 1e-12);
}

TEST(Spearman, Examples) {
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {2, 1, 4, 3}), 0.6, 1e-12);
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {1, 2, 3, 4}), 1.0, 1e-15);
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0, 1e-15);
  EXPECT_THROW(spearman({1}, {2}), NumericError);
  EXPECT_THROW(spearman({1, 2}, {3, 3}), NumericError);
  EXPECT_THROW(spearman({1, 2, 3}, {1, 2}), NumericError);
}

TEST(Spearman, FractionalRanks) {
  EXPECT_EQ(fractional_ranks({10, 20, 20, 5}), (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(Spearman, MatchesBruteForceOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(50), y(50);
    for (int i = 0; i < 50; ++i) {
      // Coarse values so ties occur.
      x[i] = std::round(uniform(rng, 0, 10));
      y[i] = x[i] + uniform(rng, -3, 3);
    }
    EXPECT_NEAR(spearman(x, y), testing::brute_force_spearman(x, y), 1e-10);
  }
}

TEST(Spearman, MonotoneTransformInvariance) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(30), y(30), ty(30);
    for (int i = 0; i < 30; ++i) {
      x[i] = uniform(rng, -1, 1);
      y[i] = x[i] + uniform(rng, -1, 1);
      ty[i] = std::exp(3 * y[i]) + 7;
    }
    EXPECT_NEAR(spearman(x, ty), spearman(x, y), 1e-12);
  }
}

TEST(StsEvaluate, PerfectEmbedderScoresHundred) {
  const auto ex = testing::two_subset_example();
  std::vector<StsPair> low;
  for (const auto& p : ex.pairs) {
    if (p.subset_tag == "low") low.push_back(p);
  }
  const auto report = sts_evaluate(ex.embedder(), {{"low", low}});
  EXPECT_NEAR(report.per_task_spearman.at("low"), 100.0, 1e-9);
  EXPECT_NEAR(report.average, 100.0, 1e-9);
}

TEST(StsEvaluate, AllSettingConcatenatesSubsets) {
  const auto ex = testing::two_subset_example();
  const auto report = sts_evaluate(ex.embedder(), {{"task", ex.pairs}}, {true});
  EXPECT_NEAR(report.per_subset.at("task").at("low"), 100.0, 1e-9);
  EXPECT_NEAR(report.per_subset.at("task").at("high"), 100.0, 1e-9);
  // ranks of cosines [3,4,1,2] against gold [1,2,3,4]
  EXPECT_NEAR(report.per_task_spearman.at("task"), -60.0, 1e-9);
  std::vector<double> gold, pred;
  for (const auto& p : ex.pairs) {
    gold.push_back(p.gold);
    pred.push_back(cosine_sim(ex.embeddings.at(p.sent_a), ex.embeddings.at(p.sent_b)));
  }
  EXPECT_NEAR(report.per_task_spearman.at("task"), 100 * testing::brute_force_spearman(gold, pred), 1e-9);
}

TEST(StsEvaluate, Errors) {
  const auto ex = testing::two_subset_example();
  EXPECT_THROW(sts_evaluate(ex.embedder(), {{"one", {ex.pairs[0]}}}), DataError);
  EXPECT_THROW(sts_evaluate(ex.embedder(), {{"none", {}}}), DataError);
  EXPECT_THROW(sts_evaluate(ex.embedder(), {}), DataError);
  const SentenceEmbedder failing = [](const std::string&) -> VectorXs { throw NumericError("boom"); };
  EXPECT_THROW(sts_evaluate(failing, {{"t", ex.pairs}}), NumericError);
}

TEST(StsEvaluate, AlignmentUniformityProtocol) {
  std::map<std::string, VectorXs> emb = {{"a", vec({1, 0})}, {"b", vec({0, 1})}, {"c", vec({-1, 0})}};
  const SentenceEmbedder e = [&](const std::string& s) { return emb.at(s); };
  // Only the gold 4.5 pair is a positive; uniformity covers a, b and c.
  const auto [al, un] = alignment_uniformity(e, {{"a", "b", 4.5, ""}, {"a", "c", 1.0, ""}});
  EXPECT_NEAR(al, 2.0, 1e-12);
  EXPECT_NEAR(un, uniformity_loss({vec({1, 0}), vec({0, 1}), vec({-1, 0})}), 1e-12);
  EXPECT_THROW(alignment_uniformity(e, {{"a", "b", 4.0, ""}}), DataError);
}

TEST(StsFile, RoundTripAndValidation) {
  const auto dir = testing::scratch_dir("sts");
  const std::vector<StsPair> pairs = {{"a b", "c d", 3.25, "x"}, {"e", "f", 0.0, ""}};
  write_sts_file(dir / "s.tsv", pairs);
  const auto back = read_sts_file(dir / "s.tsv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].sent_b, "c d");
  EXPECT_EQ(back[0].gold, 3.25);
  EXPECT_EQ(back[0].subset_tag, "x");
  std::ofstream(dir / "bad.tsv") << "a\tb\t7\n";
  EXPECT_THROW(read_sts_file(dir / "bad.tsv"), DataError);
}

TEST(Recall, HandBuiltCase) {
  MatrixXs s(3, 3);
  s << .9, .1, .0, .2, .8, .1, .3, .4, .2;
  EXPECT_EQ(recall_at_k(s, {0, 1, 2}, 1), 2.0 / 3.0);
  EXPECT_EQ(recall_at_k(s, {0, 1, 2}, 3), 1.0);
  EXPECT_THROW(recall_at_k(s, {0, 1, 3}, 1), NumericError);
}

TEST(Recall, Examples) {
  Rng rng(4);
  std::vector<VectorXs> pts;
  for (int i = 0; i < 10; ++i) pts.push_back(random_unit(rng, 6));
  std::vector<std::size_t> identity(10), farthest(10);
  for (std::size_t i = 0; i < 10; ++i) {
    identity[i] = i;
    double lo = 2;
    for (std::size_t j = 0; j < 10; ++j) {
      const double c = cosine_sim(pts[i], pts[j]);
      if (c < lo) lo = c, farthest[i] = j;
    }
  }
  EXPECT_EQ(recall_at_k(pts, pts, identity, 1), 1.0);
  EXPECT_EQ(recall_at_k(pts, pts, farthest, 9), 0.0);
  double prev = 0;
  for (int k = 1; k <= 10; ++k) {
    const double r = recall_at_k(pts, pts, farthest, k);
    EXPECT_GE(r, prev);
    prev = r;
  }
  EXPECT_EQ(prev, 1.0);
}

TEST(Retrieval, MatchesExhaustiveScan) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<VectorXs> corpus_embs, queries;
    std::vector<std::string> corpus;
    for (int i = 0; i < 100; ++i) {
      corpus_embs.push_back(random_unit(rng, 4));
      corpus.push_back("s" + std::to_string(i));
      queries.push_back(random_unit(rng, 4));
    }
    const auto& q = queries[0];
    std::vector<double> scores;
    for (const auto& c : corpus_embs) scores.push_back(cosine_sim(q, c));
    EXPECT_EQ(rank_by_cosine(q, corpus_embs), testing::brute_force_top_k(scores, 100));

    // The query text is in the corpus at index 17 and must be skipped.
    std::vector<bool> excluded(100, false);
    excluded[17] = true;
    const auto hits = nearest_sentences("s17", q, corpus, corpus_embs, 5);
    const auto expected = testing::brute_force_top_k(scores, 5, excluded);
    ASSERT_EQ(hits.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(hits[i].index, expected[i]);
      EXPECT_EQ(hits[i].text, corpus[expected[i]]);
    }

    std::vector<std::size_t> truth(100);
    for (std::size_t i = 0; i < 100; ++i) truth[i] = uniform_index(rng, 100);
    for (int k : {1, 5, 10}) {
      double hitsk = 0;
      for (std::size_t i = 0; i < 100; ++i) {
        std::vector<double> s;
        for (const auto& c : corpus_embs) s.push_back(cosine_sim(queries[i], c));
        const auto top = testing::brute_force_top_k(s, static_cast<std::size_t>(k));
        hitsk += std::find(top.begin(), top.end(), truth[i]) != top.end();
      }
      EXPECT_EQ(recall_at_k(queries, corpus_embs, truth, k), hitsk / 100);
    }
  }
}

TEST(Retrieval, Examples) {
  const std::vector<VectorXs> one = {vec({1, 0})};
  const auto hits = nearest_sentences("query", vec({0, 1}), {"other"}, one, 3);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].text, "other");
  EXPECT_TRUE(nearest_sentences("other", vec({0, 1}), {"other"}, one, 3).empty());
  EXPECT_THROW(nearest_sentences("q", vec({0, 1}), {}, {}, 3), DataError);
}

TEST(Welch, Examples) {
  const auto r = welch_t_test({1, 2, 3, 4, 5}, {3, 4, 5, 6, 7});
  EXPECT_NEAR(r.t, -2.0, 1e-12);
  EXPECT_NEAR(r.dof, 8.0, 1e-12);
  EXPECT_NEAR(r.p_value, 0.0805, 5e-4);
  EXPECT_FALSE(r.significant);

  const auto same = welch_t_test({1, 3, 2}, {1, 3, 2});
  EXPECT_EQ(same.t, 0.0);
  EXPECT_FALSE(same.significant);

  const auto flat = welch_t_test({0, 0, 0, 0, 0}, {1, 1, 1, 1, 1});
  EXPECT_TRUE(flat.significant);
  const auto flat_equal = welch_t_test({2, 2}, {2, 2});
  EXPECT_EQ(flat_equal.t, 0.0);
  EXPECT_FALSE(flat_equal.significant);

  EXPECT_THROW(welch_t_test({1}, {1, 2}), NumericError);
}

TEST(Welch, AntisymmetricAndStrongEffectsSignificant) {
  const std::vector<double> a = {70.1, 70.9, 69.8, 70.4, 70.2}, b = {72.0, 71.6, 72.3, 71.9, 72.4};
  const auto ab = welch_t_test(a, b), ba = welch_t_test(b, a);
  EXPECT_NEAR(ab.t, -ba.t, 1e-12);
  EXPECT_NEAR(ab.p_value, ba.p_value, 1e-12);
  EXPECT_TRUE(ab.significant);
  EXPECT_NEAR(mean({1, 2, 3}), 2.0, 1e-15);
  EXPECT_NEAR(sample_stddev({1, 2, 3}), 1.0, 1e-15);
}

}  // namespace
}  // namespace mcse
