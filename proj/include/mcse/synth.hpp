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

// Synthetic grounded corpora with known semantics.
//
// Every topic owns a disjoint set of pseudo-words and a unit direction in
// image-feature space. A sentence is generated from a topic mixture: each
// token is a word of a topic drawn from the mixture, or, with probability
// noise_word_rate, a word of a uniformly chosen topic. Images are noisy
// copies of their topic direction and are captioned by pure-topic sentences.
// STS gold scores are 5 * max(0, cos) of the two sentences' mixtures, so the
// mixture vector itself is a perfect embedder.

#ifndef MCSE_SYNTH_HPP_
#define MCSE_SYNTH_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "mcse/data_io.hpp"
#include "mcse/metrics.hpp"
#include "mcse/model.hpp"

namespace mcse {

struct SynthConfig {
  int num_topics = 8;
  int words_per_topic = 40;
  int min_sentence_length = 6;
  int max_sentence_length = 12;
  int num_images = 2000;
  int captions_per_image = 3;
  int num_text_only_sentences = 8000;
  Index feature_dim = 48;
  double feature_noise = 0.1;
  double noise_word_rate = 0.1;
  int sts_test_pairs = 400;
  int sts_dev_pairs = 200;
  // Distinct words allowed across all topics.
  int vocab_budget = 4096;
  std::uint64_t seed = 1;

  void validate() const;
};

// A sentence with the topic mixture it was generated from.
struct MixtureSentence {
  std::string text;
  VectorXs mixture;  // num_topics weights, summing to one
  std::string style; // "caption" or "wiki"
};

struct GroundedCorpus {
  std::vector<std::string> text_only;
  std::vector<CaptionGroup> captions;
  FeatureTable features;
  std::vector<StsPair> sts_dev;
  std::vector<StsPair> sts_test;
  MatrixXs topic_directions;  // num_topics x feature_dim, orthonormal rows when possible
  std::unordered_map<std::string, VectorXs> mixtures;  // every generated sentence

  // Embeds a generated sentence as its mixture vector.
  SentenceEmbedder ground_truth_embedder() const;
};

// Pseudo-word for (topic, index); distinct for distinct arguments.
std::string topic_word(int topic, int index);

double mixture_gold(const VectorXs& a, const VectorXs& b);

GroundedCorpus generate_grounded_corpus(const SynthConfig& cfg);

// Samples count distinct-sentence pairs whose gold scores are spread evenly
// over [0,1), [1,2), [2,3), [3,4] and (4,5].
std::vector<StsPair> derive_sts_pairs(const std::vector<MixtureSentence>& pool, int count, std::uint64_t seed);

// text_only.txt, captions.tsv, features.txt, sts_dev.tsv, sts_test.tsv, mixtures.tsv
void write_grounded_corpus(const std::filesystem::path& dir, const GroundedCorpus& corpus);

// "text<TAB>w1,w2,..." lines, as written by write_grounded_corpus.
std::unordered_map<std::string, VectorXs> read_mixture_file(const std::filesystem::path& path);

}  // namespace mcse

#endif  // MCSE_SYNTH_HPP_
