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

#include "mcse/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <boost/math/distributions/students_t.hpp>

#include "mcse/random.hpp"
#include "text_util.hpp"

namespace mcse {

std::vector<StsPair> read_sts_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open STS file " + path.string());
  std::vector<StsPair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (trim(line).empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3 && fields.size() != 4) {
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": expected sent_a<TAB>sent_b<TAB>gold[<TAB>subset]");
    }
    StsPair p{std::string(fields[0]), std::string(fields[1]), parse_double(fields[2], "gold score"),
              fields.size() == 4 ? std::string(fields[3]) : std::string()};
    if (!(p.gold >= 0.0 && p.gold <= 5.0)) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": gold score outside [0, 5]");
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void write_sts_file(const std::filesystem::path& path, const std::vector<StsPair>& pairs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write STS file " + path.string());
  for (const auto& p : pairs) {
    out << p.sent_a << '\t' << p.sent_b << '\t' << format_double(p.gold);
    if (!p.subset_tag.empty()) out << '\t' << p.subset_tag;
    out << '\n';
  }
}

std::string report_to_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "task,subset,metric,value\n";
  for (const auto& [task, rho] : report.per_task_spearman) {
    out << task << ",all,spearman," << format_double(rho) << '\n';
    auto it = report.per_subset.find(task);
    if (it == report.per_subset.end()) continue;
    for (const auto& [subset, sub_rho] : it->second) {
      out << task << ',' << subset << ",spearman," << format_double(sub_rho) << '\n';
    }
  }
  out << "average,all,spearman," << format_double(report.average) << '\n';
  if (report.alignment) out << "space,all,alignment," << format_double(*report.alignment) << '\n';
  if (report.uniformity) out << "space,all,uniformity," << format_double(*report.uniformity) << '\n';
  for (const auto& [key, value] : report.recall) {
    out << "retrieval," << key.first << ",recall@" << key.second << ',' << format_double(value) << '\n';
  }
  return out.str();
}

double alignment_loss(const std::vector<std::pair<VectorXs, VectorXs>>& positive_pairs) {
  if (positive_pairs.empty()) throw NumericError("alignment_loss: no positive pairs");
  double sum = 0.0;
  for (const auto& [a, b] : positive_pairs) {
    if (a.size() != b.size()) throw NumericError("alignment_loss: dimension mismatch");
    sum += (l2_normalize(a) - l2_normalize(b)).squaredNorm();
  }
  return sum / static_cast<double>(positive_pairs.size());
}

double uniformity_loss(const std::vector<VectorXs>& embeddings, std::uint64_t sample_seed) {
  if (embeddings.size() < 2) throw NumericError("uniformity_loss: need at least two embeddings");
  std::vector<std::size_t> pick(embeddings.size());
  std::iota(pick.begin(), pick.end(), std::size_t{0});
  if (pick.size() > kUniformitySampleCap) {
    Rng rng(derive_seed(sample_seed, {0x0u}));
    seeded_shuffle(pick.begin(), pick.end(), rng);
    pick.resize(kUniformitySampleCap);
    std::sort(pick.begin(), pick.end());
  }
  std::vector<VectorXs> unit;
  unit.reserve(pick.size());
  for (auto i : pick) unit.push_back(l2_normalize(embeddings[i]));

  // log mean exp(-2 d^2) via log-sum-exp over the pair terms.
  const std::size_t n = unit.size();
  VectorXs terms(static_cast<Index>(n * (n - 1) / 2));
  Index k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) terms(k++) = -2.0 * (unit[i] - unit[j]).squaredNorm();
  }
  const double value = log_sum_exp(terms) - std::log(static_cast<double>(terms.size()));
  return std::min(value, 0.0);
}

std::vector<double> fractional_ranks(const std::vector<double>& xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t m = i; m <= j; ++m) ranks[order[m]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& gold, const std::vector<double>& pred) {
  if (gold.size() != pred.size()) throw NumericError("spearman: length mismatch");
  if (gold.size() < 2) throw NumericError("spearman: need at least two observations");
  const auto rg = fractional_ranks(gold);
  const auto rp = fractional_ranks(pred);
  const Eigen::Map<const VectorXs> a(rg.data(), static_cast<Index>(rg.size()));
  const Eigen::Map<const VectorXs> b(rp.data(), static_cast<Index>(rp.size()));
  const VectorXs ca = a.array() - a.mean();
  const VectorXs cb = b.array() - b.mean();
  const double va = ca.squaredNorm();
  const double vb = cb.squaredNorm();
  if (!(va > 0.0) || !(vb > 0.0)) throw NumericError("spearman: zero rank variance");
  return std::clamp(ca.dot(cb) / std::sqrt(va * vb), -1.0, 1.0);
}

namespace {

class EmbeddingCache {
 public:
  explicit EmbeddingCache(const SentenceEmbedder& embedder) : embedder_(embedder) {}

  const VectorXs& get(const std::string& s) {
    auto it = cache_.find(s);
    if (it == cache_.end()) it = cache_.emplace(s, embedder_(s)).first;
    return it->second;
  }

 private:
  const SentenceEmbedder& embedder_;
  std::unordered_map<std::string, VectorXs> cache_;
};

bool has_rank_variance(const std::vector<double>& xs) {
  return std::adjacent_find(xs.begin(), xs.end(), std::not_equal_to<>()) != xs.end();
}

}  // namespace

EvalReport sts_evaluate(const SentenceEmbedder& embedder,
                        const std::map<std::string, std::vector<StsPair>>& tasks,
                        const StsOptions& options) {
  if (tasks.empty()) throw DataError("sts_evaluate: no tasks");
  EmbeddingCache cache(embedder);
  EvalReport report;
  for (const auto& [task, pairs] : tasks) {
    if (pairs.empty()) throw DataError("sts_evaluate: task '" + task + "' is empty");
    if (pairs.size() < 2) throw DataError("sts_evaluate: task '" + task + "' needs at least two pairs");
    std::vector<double> gold, pred;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> subsets;
    for (const auto& p : pairs) {
      const double score = cosine_sim(cache.get(p.sent_a), cache.get(p.sent_b));
      gold.push_back(p.gold);
      pred.push_back(score);
      if (options.per_subset) {
        auto& sub = subsets[p.subset_tag.empty() ? "default" : p.subset_tag];
        sub.first.push_back(p.gold);
        sub.second.push_back(score);
      }
    }
    report.per_task_spearman[task] = 100.0 * spearman(gold, pred);
    for (const auto& [name, sub] : subsets) {
      // A subset whose gold or predictions are constant has no defined rho.
      if (sub.first.size() < 2 || !has_rank_variance(sub.first) || !has_rank_variance(sub.second)) continue;
      report.per_subset[task][name] = 100.0 * spearman(sub.first, sub.second);
    }
  }
  double total = 0.0;
  for (const auto& [task, rho] : report.per_task_spearman) total += rho;
  report.average = total / static_cast<double>(report.per_task_spearman.size());
  return report;
}

std::pair<double, double> alignment_uniformity(const SentenceEmbedder& embedder,
                                               const std::vector<StsPair>& pairs) {
  EmbeddingCache cache(embedder);
  std::vector<std::pair<VectorXs, VectorXs>> positives;
  std::vector<VectorXs> all;
  std::map<std::string, bool> seen;
  for (const auto& p : pairs) {
    if (p.gold > kPositiveGoldThreshold) positives.emplace_back(cache.get(p.sent_a), cache.get(p.sent_b));
    for (const auto* s : {&p.sent_a, &p.sent_b}) {
      if (seen.emplace(*s, true).second) all.push_back(cache.get(*s));
    }
  }
  if (positives.empty()) throw DataError("no pairs with gold score above 4.0");
  return {alignment_loss(positives), uniformity_loss(all)};
}

std::vector<std::size_t> rank_by_cosine(const VectorXs& query, const std::vector<VectorXs>& targets) {
  std::vector<double> score(targets.size());
  for (std::size_t j = 0; j < targets.size(); ++j) score[j] = cosine_sim(query, targets[j]);
  std::vector<std::size_t> order(targets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  return order;
}

double recall_at_k(const MatrixXs& scores, const std::vector<std::size_t>& truth, int k) {
  if (k < 1) throw NumericError("recall_at_k: k must be at least 1");
  if (scores.cols() < 1) throw NumericError("recall_at_k: no targets");
  if (scores.rows() < 1) throw NumericError("recall_at_k: no queries");
  if (truth.size() != static_cast<std::size_t>(scores.rows())) {
    throw NumericError("recall_at_k: truth must map every query");
  }
  std::size_t hits = 0;
  for (Index q = 0; q < scores.rows(); ++q) {
    const auto t = static_cast<Index>(truth[static_cast<std::size_t>(q)]);
    if (t >= scores.cols()) throw NumericError("recall_at_k: truth index out of range");
    const double own = scores(q, t);
    // Rank of the true target under (score desc, index asc).
    Index ahead = 0;
    for (Index j = 0; j < scores.cols(); ++j) {
      if (j == t) continue;
      if (scores(q, j) > own || (scores(q, j) == own && j < t)) ++ahead;
    }
    if (ahead < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(scores.rows());
}

double recall_at_k(const std::vector<VectorXs>& queries, const std::vector<VectorXs>& targets,
                   const std::vector<std::size_t>& truth, int k) {
  if (targets.empty()) throw NumericError("recall_at_k: no targets");
  MatrixXs scores(static_cast<Index>(queries.size()), static_cast<Index>(targets.size()));
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (std::size_t j = 0; j < targets.size(); ++j) {
      scores(static_cast<Index>(q), static_cast<Index>(j)) = cosine_sim(queries[q], targets[j]);
    }
  }
  return recall_at_k(scores, truth, k);
}

std::vector<RetrievedSentence> nearest_sentences(const std::string& query, const VectorXs& query_embedding,
                                                 const std::vector<std::string>& corpus,
                                                 const std::vector<VectorXs>& corpus_embeddings,
                                                 std::size_t k) {
  if (corpus.empty()) throw DataError("nearest_sentences: empty corpus");
  if (corpus.size() != corpus_embeddings.size()) {
    throw DataError("nearest_sentences: corpus and embeddings differ in length");
  }
  std::vector<RetrievedSentence> out;
  for (auto j : rank_by_cosine(query_embedding, corpus_embeddings)) {
    if (out.size() == k) break;
    if (corpus[j] == query) continue;
    out.push_back({j, corpus[j], cosine_sim(query_embedding, corpus_embeddings[j])});
  }
  return out;
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw NumericError("mean: empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b, double alpha) {
  if (a.size() < 2 || b.size() < 2) throw NumericError("welch_t_test: need at least two samples per group");
  if (!(alpha > 0.0 && alpha < 1.0)) throw NumericError("welch_t_test: alpha must be in (0, 1)");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean(a), mb = mean(b);
  const double va = std::pow(sample_stddev(a), 2) / na;
  const double vb = std::pow(sample_stddev(b), 2) / nb;
  TTestResult r;
  if (va + vb == 0.0) {
    r.dof = na + nb - 2.0;
    if (ma == mb) return r;
    r.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    r.significant = true;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(va + vb);
  r.dof = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  const boost::math::students_t dist(r.dof);
  r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  r.significant = r.p_value < alpha;
  return r;
}

}  // namespace mcse
