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

// The trainable text side (token table + mean pooling + dropout), the three
// projection heads and the frozen image-feature channel.

#ifndef MCSE_MODEL_HPP_
#define MCSE_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mcse/numeric.hpp"

namespace mcse {

using TokenIds = std::vector<std::int32_t>;

struct ModelDims {
  Index embed_dim = 32;    // d
  Index shared_dim = 16;   // d_s
  Index image_dim = 48;    // d_v
  Index vocab_size = 4096; // V

  bool operator==(const ModelDims&) const = default;
};

// tanh(W x + b), optionally followed by l2 normalization.
struct ProjectionHead {
  MatrixXs weight;
  VectorXs bias;

  Index in_dim() const { return weight.cols(); }
  Index out_dim() const { return weight.rows(); }
};

enum class HeadKind { kTextual, kSharedText, kSharedImage };

const char* head_name(HeadKind kind);

// One full set of tensors. Used both for values and for their gradients.
struct ParamSet {
  MatrixXs embed;  // V x d
  ProjectionHead textual;       // d -> d
  ProjectionHead shared_text;   // d -> d_s
  ProjectionHead shared_image;  // d_v -> d_s

  static ParamSet zeros(const ModelDims& dims);

  ProjectionHead& head(HeadKind kind);
  const ProjectionHead& head(HeadKind kind) const;

  // Every tensor as a flat span, in a fixed order shared by the optimizer,
  // the checkpoint format and the gradient checks.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  static const std::vector<std::string>& tensor_names();

  void set_zero();
  bool all_finite() const;
};

struct ModelParams {
  ModelDims dims;
  ParamSet value;
  ParamSet grad;

  // Uniform in [-0.1, 0.1] drawn from the seed, tensors in tensor_names() order.
  static ModelParams init(const ModelDims& dims, std::uint64_t seed);

  void zero_grad() { grad.set_zero(); }
};

// Lowercases, splits on anything that is not a letter or digit, hashes each
// token into [0, vocab_size).
TokenIds tokenize(std::string_view text, Index vocab_size);

class DropoutMask {
 public:
  // keep_prob == 1 keeps every unit with unit scaling.
  static DropoutMask identity(Index dim);
  static DropoutMask sample(Index dim, double keep_prob, std::uint64_t seed);
  // The mask for one view (pass 0 or 1) of one instance.
  static DropoutMask for_instance(Index dim, double keep_prob, std::uint64_t seed,
                                  std::uint64_t instance_id, std::uint64_t pass);

  Index dim() const { return static_cast<Index>(keep_flags_.size()); }
  double keep_prob() const { return keep_prob_; }
  const std::vector<bool>& keep_flags() const { return keep_flags_; }
  // Per-unit multiplier: 1/keep_prob where kept, 0 where dropped.
  const VectorXs& scale() const { return scale_; }

 private:
  DropoutMask(std::vector<bool> flags, double keep_prob);

  std::vector<bool> keep_flags_;
  double keep_prob_ = 1.0;
  VectorXs scale_;
};

// Mean of the token rows of the embedding table, no dropout.
VectorXs mean_pool(const TokenIds& tokens, const ModelParams& params);

// Mean pooling followed by inverted dropout.
VectorXs encode_sentence(const TokenIds& tokens, const ModelParams& params,
                         const DropoutMask& mask);

VectorXs project(HeadKind kind, const ModelParams& params, const VectorXs& x);

// Pre-projection embedding used for every evaluation.
VectorXs embed_for_eval(const TokenIds& tokens, const ModelParams& params);

struct ImageFeature {
  std::string image_id;
  VectorXs vector;
};

// Precomputed, frozen image features keyed by id.
class FeatureTable {
 public:
  FeatureTable() = default;
  explicit FeatureTable(Index dim) : dim_(dim) {}

  void add(ImageFeature feature);
  Index dim() const { return dim_; }
  std::size_t size() const { return features_.size(); }
  bool contains(const std::string& image_id) const { return index_.count(image_id) != 0; }
  const ImageFeature& at(const std::string& image_id) const;
  const std::vector<ImageFeature>& features() const { return features_; }

 private:
  Index dim_ = 0;
  std::vector<ImageFeature> features_;
  std::unordered_map<std::string, std::size_t> index_;
};

// "# d_v=<dim>" header, then "image_id<TAB>v1,v2,...".
FeatureTable read_feature_file(const std::filesystem::path& path);
void write_feature_file(const std::filesystem::path& path, const FeatureTable& table);

}  // namespace mcse

#endif  // MCSE_MODEL_HPP_
