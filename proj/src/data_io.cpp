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

#include "mcse/data_io.hpp"

#include <fstream>
#include <unordered_map>

#include "text_util.hpp"

namespace mcse {

std::vector<SentenceRecord> load_sentence_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open sentence corpus " + path.string());
  std::vector<SentenceRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    const auto text = trim(line);
    if (text.empty()) continue;
    records.push_back({std::to_string(lineno), std::string(text)});
  }
  if (records.empty()) throw DataError("sentence corpus " + path.string() + " has no usable lines");
  return records;
}

void write_sentence_corpus(const std::filesystem::path& path, const std::vector<std::string>& sentences) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write sentence corpus " + path.string());
  for (const auto& s : sentences) out << s << '\n';
}

std::vector<CaptionGroup> read_caption_groups(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open captions file " + path.string());
  std::vector<CaptionGroup> groups;
  std::unordered_map<std::string, std::size_t> index;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected image_id<TAB>caption");
    }
    std::string image_id(trim(std::string_view(line).substr(0, tab)));
    std::string caption(trim(std::string_view(line).substr(tab + 1)));
    if (image_id.empty()) throw DataError(path.string() + ":" + std::to_string(lineno) + ": empty image_id");
    auto [it, inserted] = index.emplace(image_id, groups.size());
    if (inserted) groups.push_back({image_id, {}});
    if (!caption.empty()) groups[it->second].captions.push_back(std::move(caption));
  }
  return groups;
}

void write_caption_file(const std::filesystem::path& path, const std::vector<CaptionGroup>& groups) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write captions file " + path.string());
  for (const auto& g : groups) {
    for (const auto& c : g.captions) out << g.image_id << '\t' << c << '\n';
  }
}

std::vector<SentenceImagePair> load_multimodal_dataset(const std::vector<CaptionGroup>& groups,
                                                       const FeatureTable& features, std::uint64_t seed) {
  std::vector<SentenceImagePair> pairs;
  pairs.reserve(groups.size());
  for (const auto& g : groups) {
    if (g.captions.empty()) throw DataError("caption group for image '" + g.image_id + "' is empty");
    if (!features.contains(g.image_id)) {
      throw DataError("image '" + g.image_id + "' has no entry in the feature file");
    }
    Rng rng(derive_seed(seed, {fnv1a64(g.image_id)}));
    const auto pick = uniform_index(rng, g.captions.size());
    pairs.push_back({{g.image_id, g.captions[pick]}, g.image_id});
  }
  return pairs;
}

std::vector<SentenceImagePair> load_multimodal_dataset(const std::filesystem::path& captions_path,
                                                       const std::filesystem::path& features_path,
                                                       std::uint64_t seed) {
  return load_multimodal_dataset(read_caption_groups(captions_path), read_feature_file(features_path), seed);
}

std::vector<BatchDescriptor> plan_batches(std::size_t text_size, std::size_t multimodal_size,
                                          std::size_t batch_size, int epochs, std::uint64_t seed) {
  if (text_size + multimodal_size == 0) throw DataError("plan_batches: both corpora are empty");
  if (batch_size < 1) throw DataError("plan_batches: batch size must be at least 1");
  if (epochs < 1) throw DataError("plan_batches: epochs must be at least 1");

  auto source_batches = [&](std::size_t size, std::uint64_t tag) {
    std::vector<std::vector<std::size_t>> batches;
    std::vector<std::size_t> order(size);
    for (int e = 0; e < epochs; ++e) {
      for (std::size_t i = 0; i < size; ++i) order[i] = i;
      Rng rng(derive_seed(seed, {tag, static_cast<std::uint64_t>(e)}));
      seeded_shuffle(order.begin(), order.end(), rng);
      for (std::size_t b = 0; b < size; b += batch_size) {
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(b),
                             order.begin() + static_cast<std::ptrdiff_t>(std::min(size, b + batch_size)));
      }
    }
    return batches;
  };
  auto text = source_batches(text_size, 1);
  auto multimodal = source_batches(multimodal_size, 2);

  std::vector<BatchSource> sequence(text.size(), BatchSource::kText);
  sequence.insert(sequence.end(), multimodal.size(), BatchSource::kMultimodal);
  Rng rng(derive_seed(seed, {3}));
  seeded_shuffle(sequence.begin(), sequence.end(), rng);

  std::vector<BatchDescriptor> plan;
  plan.reserve(sequence.size());
  std::size_t ti = 0, mi = 0;
  for (auto source : sequence) {
    auto& items = source == BatchSource::kText ? text[ti++] : multimodal[mi++];
    plan.push_back({source, std::move(items)});
  }
  return plan;
}

std::vector<SentenceImagePair> shuffle_image_ablation(const std::vector<SentenceImagePair>& pairs,
                                                      std::uint64_t seed) {
  if (pairs.size() < 2) throw DataError("shuffle_image_ablation: need at least two pairs");
  std::vector<std::string> images;
  images.reserve(pairs.size());
  for (const auto& p : pairs) images.push_back(p.image_id);
  Rng rng(derive_seed(seed, {0x5f1e}));
  seeded_shuffle(images.begin(), images.end(), rng);
  auto out = pairs;
  for (std::size_t i = 0; i < out.size(); ++i) out[i].image_id = std::move(images[i]);
  return out;
}

}  // namespace mcse
