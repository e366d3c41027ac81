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

#include "mcse/synth.hpp"

#include <array>
#include <fstream>

#include "mcse/random.hpp"
#include "text_util.hpp"

namespace mcse {

void SynthConfig::validate() const {
  if (num_topics < 2) throw DataError("synth: need at least two topics");
  if (words_per_topic < 1 || min_sentence_length < 1 || max_sentence_length < min_sentence_length ||
      num_images < 1 || captions_per_image < 1 || num_text_only_sentences < 1 || feature_dim < 1 ||
      sts_test_pairs < 1 || sts_dev_pairs < 1) {
    throw DataError("synth: counts and lengths must be positive");
  }
  if (!(feature_noise >= 0.0)) throw DataError("synth: feature_noise must be non-negative");
  if (!(noise_word_rate >= 0.0 && noise_word_rate <= 1.0)) throw DataError("synth: noise_word_rate must be in [0, 1]");
  if (static_cast<long>(num_topics) * words_per_topic > vocab_budget) {
    throw DataError("synth: word budget " + std::to_string(vocab_budget) + " cannot hold " +
                    std::to_string(num_topics) + " disjoint topic vocabularies of " +
                    std::to_string(words_per_topic) + " words");
  }
}

std::string topic_word(int topic, int index) {
  static constexpr std::array<char, 16> kConsonants = {'b', 'd', 'f', 'g', 'k', 'l', 'm', 'n',
                                                       'p', 'r', 's', 't', 'v', 'z', 'h', 'j'};
  static constexpr std::array<char, 5> kVowels = {'a', 'e', 'i', 'o', 'u'};
  constexpr int kSyllables = static_cast<int>(kConsonants.size() * kVowels.size());
  // Topic prefix syllable, then the index in base-80 syllables, at least two.
  std::string word;
  auto syllable = [&](int s) {
    word.push_back(kConsonants[static_cast<std::size_t>(s / static_cast<int>(kVowels.size()))]);
    word.push_back(kVowels[static_cast<std::size_t>(s % static_cast<int>(kVowels.size()))]);
  };
  int t = topic;
  do {
    syllable(t % kSyllables);
    t /= kSyllables;
  } while (t > 0);
  word.push_back('r');  // separator; never the second char of a syllable
  int k = index;
  int emitted = 0;
  do {
    syllable(k % kSyllables);
    k /= kSyllables;
    ++emitted;
  } while (k > 0 || emitted < 2);
  return word;
}

double mixture_gold(const VectorXs& a, const VectorXs& b) {
  return 5.0 * std::max(0.0, cosine_sim(a, b));
}

namespace {

class SentenceSampler {
 public:
  SentenceSampler(const SynthConfig& cfg) : cfg_(cfg) {}

  std::string sample(const VectorXs& mixture, Rng& rng) const {
    const int span = cfg_.max_sentence_length - cfg_.min_sentence_length + 1;
    const int length = cfg_.min_sentence_length + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(span)));
    std::string text;
    for (int i = 0; i < length; ++i) {
      int topic;
      if (uniform01(rng) < cfg_.noise_word_rate) {
        topic = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(cfg_.num_topics)));
      } else {
        topic = draw_topic(mixture, rng);
      }
      const int word = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(cfg_.words_per_topic)));
      if (i) text.push_back(' ');
      text += topic_word(topic, word);
    }
    text += " .";
    return text;
  }

 private:
  static int draw_topic(const VectorXs& mixture, Rng& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (Index t = 0; t < mixture.size(); ++t) {
      acc += mixture(t);
      if (u < acc) return static_cast<int>(t);
    }
    // Rounding left u above the cumulative sum; use the last active topic.
    for (Index t = mixture.size() - 1; t >= 0; --t) {
      if (mixture(t) > 0.0) return static_cast<int>(t);
    }
    return 0;
  }

  const SynthConfig& cfg_;
};

VectorXs pure_mixture(int topics, int topic) {
  VectorXs m = VectorXs::Zero(topics);
  m(topic) = 1.0;
  return m;
}

// Up to max_active topics with flat-Dirichlet weights.
VectorXs random_mixture(int topics, int max_active, Rng& rng) {
  const int active = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(max_active)));
  std::vector<int> ids(static_cast<std::size_t>(topics));
  for (int t = 0; t < topics; ++t) ids[static_cast<std::size_t>(t)] = t;
  seeded_shuffle(ids.begin(), ids.end(), rng);
  VectorXs m = VectorXs::Zero(topics);
  for (int i = 0; i < active; ++i) {
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    m(ids[static_cast<std::size_t>(i)]) = -std::log(u);
  }
  return m / m.sum();
}

MatrixXs make_topic_directions(int topics, Index dim, Rng& rng) {
  MatrixXs gauss(dim, topics);
  for (Index i = 0; i < gauss.size(); ++i) gauss.data()[i] = standard_normal(rng);
  MatrixXs dirs(topics, dim);
  if (topics <= dim) {
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, topics);
    dirs = q.transpose();
  } else {
    dirs = gauss.transpose();
    normalize_rows(dirs);
  }
  return dirs;
}

std::vector<MixtureSentence> make_sts_pool(const SynthConfig& cfg, const SentenceSampler& sampler, int size,
                                           Rng& rng) {
  std::vector<MixtureSentence> pool;
  for (int i = 0; i < size; ++i) {
    MixtureSentence s;
    if (i % 2 == 0) {
      s.mixture = pure_mixture(cfg.num_topics, static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(cfg.num_topics))));
      s.style = "caption";
    } else {
      s.mixture = random_mixture(cfg.num_topics, 2, rng);
      s.style = "wiki";
    }
    s.text = sampler.sample(s.mixture, rng);
    pool.push_back(std::move(s));
  }
  return pool;
}

}  // namespace

SentenceEmbedder GroundedCorpus::ground_truth_embedder() const {
  return [this](const std::string& text) -> VectorXs {
    auto it = mixtures.find(text);
    if (it == mixtures.end()) throw DataError("ground-truth embedder: unknown sentence '" + text + "'");
    return it->second;
  };
}

std::vector<StsPair> derive_sts_pairs(const std::vector<MixtureSentence>& pool, int count, std::uint64_t seed) {
  if (pool.size() < 2) throw DataError("derive_sts_pairs: pool needs at least two sentences");
  if (count < 1) throw DataError("derive_sts_pairs: count must be positive");
  constexpr int kBins = 5;
  std::array<int, kBins> quota{};
  for (int b = 0; b < kBins; ++b) quota[static_cast<std::size_t>(b)] = count / kBins;
  // Remainder goes to the top bins so the (4, 5] bin never falls below 10%.
  for (int r = 0; r < count % kBins; ++r) ++quota[static_cast<std::size_t>(kBins - 1 - r)];

  auto bin_of = [](double gold) {
    if (gold > kPositiveGoldThreshold) return 4;
    return std::min(3, static_cast<int>(std::floor(gold)));
  };

  Rng rng(derive_seed(seed, {0x57}));
  std::vector<StsPair> pairs;
  const std::uint64_t n = pool.size();
  const long max_attempts = 2000L * count + 100000L;
  for (long attempt = 0; attempt < max_attempts && static_cast<int>(pairs.size()) < count; ++attempt) {
    const auto i = uniform_index(rng, n);
    const auto j = uniform_index(rng, n);
    if (i == j || pool[i].text == pool[j].text) continue;
    const double gold = mixture_gold(pool[i].mixture, pool[j].mixture);
    auto& q = quota[static_cast<std::size_t>(bin_of(gold))];
    if (q == 0) continue;
    --q;
    const std::string tag = pool[i].style == pool[j].style ? pool[i].style : "mixed";
    pairs.push_back({pool[i].text, pool[j].text, gold, tag});
  }
  if (static_cast<int>(pairs.size()) < count) {
    throw DataError("derive_sts_pairs: pool too small to fill every similarity stratum");
  }
  return pairs;
}

GroundedCorpus generate_grounded_corpus(const SynthConfig& cfg) {
  cfg.validate();
  const SentenceSampler sampler(cfg);
  GroundedCorpus corpus;

  Rng topic_rng(derive_seed(cfg.seed, {1}));
  corpus.topic_directions = make_topic_directions(cfg.num_topics, cfg.feature_dim, topic_rng);

  Rng image_rng(derive_seed(cfg.seed, {2}));
  corpus.features = FeatureTable(cfg.feature_dim);
  for (int i = 0; i < cfg.num_images; ++i) {
    const int topic = static_cast<int>(uniform_index(image_rng, static_cast<std::uint64_t>(cfg.num_topics)));
    VectorXs f = corpus.topic_directions.row(topic).transpose();
    for (Index k = 0; k < f.size(); ++k) f(k) += cfg.feature_noise * standard_normal(image_rng);
    const std::string id = "img" + std::to_string(i);
    corpus.features.add({id, l2_normalize(f)});
    CaptionGroup group{id, {}};
    const VectorXs mixture = pure_mixture(cfg.num_topics, topic);
    for (int c = 0; c < cfg.captions_per_image; ++c) {
      group.captions.push_back(sampler.sample(mixture, image_rng));
      corpus.mixtures.emplace(group.captions.back(), mixture);
    }
    corpus.captions.push_back(std::move(group));
  }

  Rng text_rng(derive_seed(cfg.seed, {3}));
  for (int i = 0; i < cfg.num_text_only_sentences; ++i) {
    const VectorXs mixture = random_mixture(cfg.num_topics, 3, text_rng);
    corpus.text_only.push_back(sampler.sample(mixture, text_rng));
    corpus.mixtures.emplace(corpus.text_only.back(), mixture);
  }

  auto make_split = [&](int pairs, std::uint64_t tag) {
    Rng rng(derive_seed(cfg.seed, {tag}));
    const auto pool = make_sts_pool(cfg, sampler, std::max(2 * pairs, 64), rng);
    for (const auto& s : pool) corpus.mixtures.emplace(s.text, s.mixture);
    return derive_sts_pairs(pool, pairs, derive_seed(cfg.seed, {tag, 1}));
  };
  corpus.sts_dev = make_split(cfg.sts_dev_pairs, 4);
  corpus.sts_test = make_split(cfg.sts_test_pairs, 5);
  return corpus;
}

void write_grounded_corpus(const std::filesystem::path& dir, const GroundedCorpus& corpus) {
  std::filesystem::create_directories(dir);
  write_sentence_corpus(dir / "text_only.txt", corpus.text_only);
  write_caption_file(dir / "captions.tsv", corpus.captions);
  write_feature_file(dir / "features.txt", corpus.features);
  write_sts_file(dir / "sts_dev.tsv", corpus.sts_dev);
  write_sts_file(dir / "sts_test.tsv", corpus.sts_test);

  std::ofstream out(dir / "mixtures.tsv");
  if (!out) throw DataError("cannot write " + (dir / "mixtures.tsv").string());
  std::vector<const std::pair<const std::string, VectorXs>*> rows;
  for (const auto& kv : corpus.mixtures) rows.push_back(&kv);
  std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->first < b->first; });
  for (const auto* kv : rows) {
    out << kv->first << '\t';
    for (Index t = 0; t < kv->second.size(); ++t) out << (t ? "," : "") << format_double(kv->second(t));
    out << '\n';
  }
}

std::unordered_map<std::string, VectorXs> read_mixture_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open mixture file " + path.string());
  std::unordered_map<std::string, VectorXs> out;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (trim(line).empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2) throw DataError("mixture file: expected text<TAB>weights");
    const auto w = split(fields[1], ',');
    VectorXs m(static_cast<Index>(w.size()));
    for (std::size_t i = 0; i < w.size(); ++i) m(static_cast<Index>(i)) = parse_double(w[i], "mixture weight");
    out.emplace(std::string(fields[0]), std::move(m));
  }
  return out;
}

}  // namespace mcse
