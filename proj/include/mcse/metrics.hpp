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

#ifndef MCSE_METRICS_HPP_
#define MCSE_METRICS_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mcse/numeric.hpp"

namespace mcse {

struct StsPair {
  std::string sent_a;
  std::string sent_b;
  double gold = 0.0;  // in [0, 5]
  std::string subset_tag;
};

// "sent_a<TAB>sent_b<TAB>gold[<TAB>subset_tag]", one pair per line.
std::vector<StsPair> read_sts_file(const std::filesystem::path& path);
void write_sts_file(const std::filesystem::path& path, const std::vector<StsPair>& pairs);

struct EvalReport {
  // Spearman x 100 per task, over the concatenation of the task's subsets.
  std::map<std::string, double> per_task_spearman;
  double average = 0.0;
  std::optional<double> alignment;
  std::optional<double> uniformity;
  // task -> subset -> Spearman x 100.
  std::map<std::string, std::map<std::string, double>> per_subset;
  // (direction, k) -> recall.
  std::map<std::pair<std::string, int>, double> recall;

  bool operator==(const EvalReport&) const = default;
};

// Writes "task,subset,spearman" rows, an "average" row and optional
// alignment/uniformity/recall rows.
std::string report_to_csv(const EvalReport& report);

// Mean squared distance between the normalized members of each pair.
double alignment_loss(const std::vector<std::pair<VectorXs, VectorXs>>& positive_pairs);

inline constexpr std::size_t kUniformitySampleCap = 5000;

// log mean over distinct unordered pairs of exp(-2 |x - y|^2), on normalized
// inputs. Sets larger than kUniformitySampleCap are subsampled with the seed.
double uniformity_loss(const std::vector<VectorXs>& embeddings, std::uint64_t sample_seed = 0);

// Fractional ranks (ties get the average of their positions), 1-based.
std::vector<double> fractional_ranks(const std::vector<double>& xs);

double spearman(const std::vector<double>& gold, const std::vector<double>& pred);

using SentenceEmbedder = std::function<VectorXs(const std::string&)>;

struct StsOptions {
  bool per_subset = false;
};

// Cosine-scored Spearman per task with every subset concatenated.
EvalReport sts_evaluate(const SentenceEmbedder& embedder,
                        const std::map<std::string, std::vector<StsPair>>& tasks,
                        const StsOptions& options = {});

// Alignment over pairs with gold above the threshold, uniformity over every
// distinct sentence of the pairs.
inline constexpr double kPositiveGoldThreshold = 4.0;
std::pair<double, double> alignment_uniformity(const SentenceEmbedder& embedder,
                                               const std::vector<StsPair>& pairs);

// Fraction of queries whose true target ranks in the top k by cosine.
// Ties are broken by lower target index.
double recall_at_k(const std::vector<VectorXs>& queries, const std::vector<VectorXs>& targets,
                   const std::vector<std::size_t>& truth, int k);
// Same, from a precomputed queries x targets similarity matrix.
double recall_at_k(const MatrixXs& scores, const std::vector<std::size_t>& truth, int k);

// Target indices ordered by decreasing cosine to the query, lower index first on ties.
std::vector<std::size_t> rank_by_cosine(const VectorXs& query, const std::vector<VectorXs>& targets);

struct RetrievedSentence {
  std::size_t index;
  std::string text;
  double score;
};

// Top-k corpus sentences by cosine to the query embedding, skipping corpus
// entries whose text equals the query.
std::vector<RetrievedSentence> nearest_sentences(const std::string& query, const VectorXs& query_embedding,
                                                 const std::vector<std::string>& corpus,
                                                 const std::vector<VectorXs>& corpus_embeddings,
                                                 std::size_t k);

struct TTestResult {
  double t = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
  bool significant = false;
};

// Two-sided Welch unequal-variance t-test. Both variances zero: equal means
// give t = 0 (not significant), unequal means are significant.
TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b, double alpha = 0.05);

double mean(const std::vector<double>& xs);
// Sample standard deviation (n - 1).
double sample_stddev(const std::vector<double>& xs);

}  // namespace mcse

#endif  // MCSE_METRICS_HPP_
