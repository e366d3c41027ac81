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

#ifndef MCSE_DATA_IO_HPP_
#define MCSE_DATA_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mcse/model.hpp"
#include "mcse/random.hpp"

namespace mcse {

struct SentenceRecord {
  std::string id;
  std::string text;

  bool operator==(const SentenceRecord&) const = default;
};

struct CaptionGroup {
  std::string image_id;
  std::vector<std::string> captions;
};

struct SentenceImagePair {
  SentenceRecord sentence;
  std::string image_id;

  bool operator==(const SentenceImagePair&) const = default;
};

// One sentence per line; blank lines are skipped, ids are 1-based line numbers.
std::vector<SentenceRecord> load_sentence_corpus(const std::filesystem::path& path);
void write_sentence_corpus(const std::filesystem::path& path, const std::vector<std::string>& sentences);

// "image_id<TAB>caption" lines, grouped by image in order of first appearance.
std::vector<CaptionGroup> read_caption_groups(const std::filesystem::path& path);
void write_caption_file(const std::filesystem::path& path, const std::vector<CaptionGroup>& groups);

// Picks one caption per image, uniformly, with a generator seeded from
// (seed, image_id). Every image must have a feature record.
std::vector<SentenceImagePair> load_multimodal_dataset(const std::vector<CaptionGroup>& groups,
                                                       const FeatureTable& features, std::uint64_t seed);
std::vector<SentenceImagePair> load_multimodal_dataset(const std::filesystem::path& captions_path,
                                                       const std::filesystem::path& features_path,
                                                       std::uint64_t seed);

enum class BatchSource { kText, kMultimodal };

struct BatchDescriptor {
  BatchSource source = BatchSource::kText;
  // Indices into the source corpus.
  std::vector<std::size_t> items;
};

// Epoch-wise shuffled batches from each source (final partial batches kept),
// interleaved by a seeded shuffle so that a batch is multimodal with
// probability B / (A + B).
std::vector<BatchDescriptor> plan_batches(std::size_t text_size, std::size_t multimodal_size,
                                          std::size_t batch_size, int epochs, std::uint64_t seed);

// Permutes the image ids across the whole dataset; sentences stay in place.
std::vector<SentenceImagePair> shuffle_image_ablation(const std::vector<SentenceImagePair>& pairs,
                                                      std::uint64_t seed);

// Seeded uniform sample of n items without replacement, in shuffled order.
template <typename T>
std::vector<T> limit_training_samples(const std::vector<T>& dataset, std::size_t n, std::uint64_t seed) {
  if (n < 1 || n > dataset.size()) {
    throw DataError("sample limit " + std::to_string(n) + " outside [1, " + std::to_string(dataset.size()) + "]");
  }
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, {0x5a3b}));
  seeded_shuffle(order.begin(), order.end(), rng);
  std::vector<T> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(dataset[order[i]]);
  return out;
}

}  // namespace mcse

#endif  // MCSE_DATA_IO_HPP_
