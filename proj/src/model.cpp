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

#include "mcse/model.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "mcse/random.hpp"
#include "text_util.hpp"

namespace mcse {

const char* head_name(HeadKind kind) {
  switch (kind) {
    case HeadKind::kTextual: return "textual";
    case HeadKind::kSharedText: return "shared_text";
    case HeadKind::kSharedImage: return "shared_image";
  }
  return "?";
}

namespace {

ProjectionHead zero_head(Index out, Index in) {
  return {MatrixXs::Zero(out, in), VectorXs::Zero(out)};
}

}  // namespace

ParamSet ParamSet::zeros(const ModelDims& dims) {
  if (dims.embed_dim < 1 || dims.shared_dim < 1 || dims.image_dim < 1 || dims.vocab_size < 1) {
    throw DataError("model dimensions must be positive");
  }
  ParamSet p;
  p.embed = MatrixXs::Zero(dims.vocab_size, dims.embed_dim);
  p.textual = zero_head(dims.embed_dim, dims.embed_dim);
  p.shared_text = zero_head(dims.shared_dim, dims.embed_dim);
  p.shared_image = zero_head(dims.shared_dim, dims.image_dim);
  return p;
}

ProjectionHead& ParamSet::head(HeadKind kind) {
  switch (kind) {
    case HeadKind::kTextual: return textual;
    case HeadKind::kSharedText: return shared_text;
    case HeadKind::kSharedImage: return shared_image;
  }
  throw std::logic_error("unknown head");
}

const ProjectionHead& ParamSet::head(HeadKind kind) const {
  return const_cast<ParamSet*>(this)->head(kind);
}

std::vector<std::span<double>> ParamSet::tensors() {
  auto span_of = [](auto& m) { return std::span<double>(m.data(), static_cast<std::size_t>(m.size())); };
  return {span_of(embed),
          span_of(textual.weight),      span_of(textual.bias),
          span_of(shared_text.weight),  span_of(shared_text.bias),
          span_of(shared_image.weight), span_of(shared_image.bias)};
}

std::vector<std::span<const double>> ParamSet::tensors() const {
  std::vector<std::span<const double>> out;
  for (auto s : const_cast<ParamSet*>(this)->tensors()) out.emplace_back(s.data(), s.size());
  return out;
}

const std::vector<std::string>& ParamSet::tensor_names() {
  static const std::vector<std::string> names = {
      "embed",
      "textual.weight",      "textual.bias",
      "shared_text.weight",  "shared_text.bias",
      "shared_image.weight", "shared_image.bias"};
  return names;
}

void ParamSet::set_zero() {
  for (auto t : tensors()) std::fill(t.begin(), t.end(), 0.0);
}

bool ParamSet::all_finite() const {
  for (auto t : tensors()) {
    for (double v : t) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

ModelParams ModelParams::init(const ModelDims& dims, std::uint64_t seed) {
  ModelParams p{dims, ParamSet::zeros(dims), ParamSet::zeros(dims)};
  Rng rng(derive_seed(seed, {0x1417}));
  for (auto t : p.value.tensors()) {
    for (double& v : t) v = uniform(rng, -0.1, 0.1);
  }
  return p;
}

TokenIds tokenize(std::string_view text, Index vocab_size) {
  if (vocab_size < 1) throw DataError("tokenize: vocab_size must be positive");
  TokenIds ids;
  std::string token;
  auto flush = [&] {
    if (!token.empty()) {
      ids.push_back(static_cast<std::int32_t>(fnv1a64(token) % static_cast<std::uint64_t>(vocab_size)));
      token.clear();
    }
  };
  for (unsigned char c : text) {
    // Bytes >= 0x80 belong to UTF-8 sequences and stay inside tokens.
    if (std::isalnum(c) || c >= 0x80) {
      token.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  if (ids.empty()) throw DataError("tokenize: text has no tokens");
  return ids;
}

DropoutMask::DropoutMask(std::vector<bool> flags, double keep_prob)
    : keep_flags_(std::move(flags)), keep_prob_(keep_prob), scale_(keep_flags_.size()) {
  for (std::size_t i = 0; i < keep_flags_.size(); ++i) {
    scale_(static_cast<Index>(i)) = keep_flags_[i] ? 1.0 / keep_prob_ : 0.0;
  }
}

DropoutMask DropoutMask::identity(Index dim) {
  return DropoutMask(std::vector<bool>(static_cast<std::size_t>(dim), true), 1.0);
}

DropoutMask DropoutMask::sample(Index dim, double keep_prob, std::uint64_t seed) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw NumericError("dropout keep_prob must be in (0, 1]");
  }
  if (keep_prob == 1.0) return identity(dim);
  Rng rng(seed);
  std::vector<bool> flags(static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < flags.size(); ++i) flags[i] = uniform01(rng) < keep_prob;
  return DropoutMask(std::move(flags), keep_prob);
}

DropoutMask DropoutMask::for_instance(Index dim, double keep_prob, std::uint64_t seed,
                                      std::uint64_t instance_id, std::uint64_t pass) {
  return sample(dim, keep_prob, derive_seed(seed, {instance_id, pass}));
}

VectorXs mean_pool(const TokenIds& tokens, const ModelParams& params) {
  if (tokens.empty()) throw NumericError("encode: empty token list");
  VectorXs sum = VectorXs::Zero(params.dims.embed_dim);
  for (auto t : tokens) {
    if (t < 0 || t >= params.value.embed.rows()) throw NumericError("encode: token id out of range");
    sum += params.value.embed.row(t).transpose();
  }
  return sum / static_cast<double>(tokens.size());
}

VectorXs encode_sentence(const TokenIds& tokens, const ModelParams& params,
                         const DropoutMask& mask) {
  if (mask.dim() != params.dims.embed_dim) throw NumericError("encode: mask dimension mismatch");
  VectorXs pooled = mean_pool(tokens, params);
  if (mask.keep_prob() == 1.0) return pooled;
  return pooled.cwiseProduct(mask.scale());
}

VectorXs project(HeadKind kind, const ModelParams& params, const VectorXs& x) {
  const ProjectionHead& head = params.value.head(kind);
  if (x.size() != head.in_dim()) {
    throw NumericError(std::string("project: input dimension mismatch for head ") + head_name(kind));
  }
  VectorXs y = (head.weight * x + head.bias).array().tanh().matrix();
  if (kind == HeadKind::kTextual) return y;
  return l2_normalize(y);
}

VectorXs embed_for_eval(const TokenIds& tokens, const ModelParams& params) {
  return mean_pool(tokens, params);
}

void FeatureTable::add(ImageFeature feature) {
  if (features_.empty() && dim_ == 0) dim_ = feature.vector.size();
  if (feature.vector.size() != dim_) {
    throw DataError("image feature '" + feature.image_id + "' has dimension " +
                    std::to_string(feature.vector.size()) + ", expected " + std::to_string(dim_));
  }
  if (!feature.vector.allFinite()) throw DataError("image feature '" + feature.image_id + "' is not finite");
  if (contains(feature.image_id)) throw DataError("duplicate image id '" + feature.image_id + "'");
  index_.emplace(feature.image_id, features_.size());
  features_.push_back(std::move(feature));
}

const ImageFeature& FeatureTable::at(const std::string& image_id) const {
  auto it = index_.find(image_id);
  if (it == index_.end()) throw DataError("no image feature for image_id '" + image_id + "'");
  return features_[it->second];
}

FeatureTable read_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("feature file " + path.string() + " is empty");
  constexpr std::string_view kHeader = "# d_v=";
  if (line.rfind(kHeader, 0) != 0) {
    throw DataError("feature file " + path.string() + ": missing '# d_v=' header");
  }
  const Index dim = static_cast<Index>(parse_double(line.substr(kHeader.size()), "d_v"));
  if (dim < 1) throw DataError("feature file " + path.string() + ": d_v must be positive");
  FeatureTable table(dim);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (trim(line).empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 2) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected image_id<TAB>values");
    }
    auto values = split(fields[1], ',');
    VectorXs v(static_cast<Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) v(static_cast<Index>(i)) = parse_double(values[i], "feature value");
    table.add({std::string(fields[0]), std::move(v)});
  }
  return table;
}

void write_feature_file(const std::filesystem::path& path, const FeatureTable& table) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write feature file " + path.string());
  out << "# d_v=" << table.dim() << '\n';
  for (const auto& f : table.features()) {
    out << f.image_id << '\t';
    for (Index i = 0; i < f.vector.size(); ++i) {
      if (i) out << ',';
      out << format_double(f.vector(i));
    }
    out << '\n';
  }
}

}  // namespace mcse
