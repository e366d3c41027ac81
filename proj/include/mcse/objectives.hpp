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

// Contrastive objectives over a mini-batch and their hand-derived gradients.
//
// For a batch of N sentences, each sentence i is pooled and encoded twice
// under independent dropout masks (views z and z'). The textual loss is an
// InfoNCE over cosine similarities of the textual-head outputs, with the
// other view of sentence i as the positive and the other views of the batch
// as negatives. For sentence-image batches both views are additionally
// mapped into the shared space and contrasted against the in-batch images,
// one NLL term per view. The batch loss is the mean of lS_i + lambda * lM_i.

#ifndef MCSE_OBJECTIVES_HPP_
#define MCSE_OBJECTIVES_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mcse/model.hpp"

namespace mcse {

struct LossConfig {
  double tau = 0.05;
  double tau_prime = 0.05;
  double lambda = 0.0;
  // Probability that a unit survives dropout.
  double keep_prob = 0.9;

  void validate() const;
  bool operator==(const LossConfig&) const = default;
};

struct BatchLossResult {
  std::vector<double> per_instance_textual;
  std::vector<double> per_instance_multimodal;  // empty for text-only batches
  double mean_total = 0.0;

  double mean_textual() const;
  double mean_multimodal() const;
};

enum class BatchKind { kTextOnly, kMultimodal };

const char* batch_kind_name(BatchKind kind);

struct MiniBatch {
  BatchKind kind = BatchKind::kTextOnly;
  std::vector<TokenIds> sentences;
  // Stable per-item ids; dropout masks are derived from them.
  std::vector<std::uint64_t> instance_ids;
  // Multimodal only, aligned with sentences.
  std::vector<std::string> image_ids;

  std::size_t size() const { return sentences.size(); }
  void validate() const;
};

// lS_i for every row; rows of the two views are paired by index.
std::vector<double> simcse_batch_loss(const MatrixXs& views_z, const MatrixXs& views_zp, double tau);

// lM_i for every row, summing the NLL of both views. Rows must be unit norm.
std::vector<double> multimodal_batch_loss(const MatrixXs& shared_z, const MatrixXs& shared_zp,
                                          const MatrixXs& images, double tau_prime);

double combined_loss(const std::vector<double>& textual, const std::vector<double>& multimodal,
                     double lambda);

// Full forward pass plus exact gradients of mean_total, accumulated into
// params.grad. The mask seed fixes every dropout draw, so two calls with the
// same seed are bitwise identical. Image features are read, never written.
BatchLossResult batch_loss_and_grads(const MiniBatch& batch, ModelParams& params,
                                     const LossConfig& cfg, const FeatureTable* features,
                                     std::uint64_t mask_seed);

// Loss only, with no gradient side effects.
BatchLossResult batch_loss(const MiniBatch& batch, const ModelParams& params,
                           const LossConfig& cfg, const FeatureTable* features,
                           std::uint64_t mask_seed);

}  // namespace mcse

#endif  // MCSE_OBJECTIVES_HPP_
