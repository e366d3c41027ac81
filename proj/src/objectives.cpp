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

#include "mcse/objectives.hpp"

#include <numeric>

namespace mcse {

void LossConfig::validate() const {
  if (!(tau > 0.0)) throw DataError("tau must be positive");
  if (!(tau_prime > 0.0)) throw DataError("tau_prime must be positive");
  if (!(lambda >= 0.0)) throw DataError("lambda must be non-negative");
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) throw DataError("keep_prob must be in (0, 1]");
}

double BatchLossResult::mean_textual() const {
  if (per_instance_textual.empty()) return 0.0;
  return std::accumulate(per_instance_textual.begin(), per_instance_textual.end(), 0.0) /
         static_cast<double>(per_instance_textual.size());
}

double BatchLossResult::mean_multimodal() const {
  if (per_instance_multimodal.empty()) return 0.0;
  return std::accumulate(per_instance_multimodal.begin(), per_instance_multimodal.end(), 0.0) /
         static_cast<double>(per_instance_multimodal.size());
}

const char* batch_kind_name(BatchKind kind) {
  return kind == BatchKind::kMultimodal ? "multimodal" : "text";
}

void MiniBatch::validate() const {
  if (sentences.empty()) throw DataError("empty batch");
  if (instance_ids.size() != sentences.size()) throw DataError("batch instance ids misaligned");
  if (kind == BatchKind::kMultimodal && image_ids.size() != sentences.size()) {
    throw DataError("multimodal batch needs one image per sentence");
  }
  if (kind == BatchKind::kTextOnly && !image_ids.empty()) {
    throw DataError("text-only batch carries image ids");
  }
}

namespace {

// Rows scaled to unit norm, keeping the norms for the backward pass.
struct NormalizedRows {
  MatrixXs unit;
  VectorXs norms;
};

NormalizedRows normalized_rows(const MatrixXs& m, const char* what) {
  NormalizedRows out{m, m.rowwise().norm()};
  for (Index i = 0; i < m.rows(); ++i) {
    if (!(out.norms(i) > kNormEpsilon)) {
      throw NumericError(std::string(what) + ": zero-norm row " + std::to_string(i));
    }
    out.unit.row(i) /= out.norms(i);
  }
  return out;
}

// Gradient wrt the unnormalized rows given the gradient wrt the unit rows.
MatrixXs normalized_rows_backward(const NormalizedRows& n, const MatrixXs& d_unit) {
  MatrixXs d(d_unit.rows(), d_unit.cols());
  for (Index i = 0; i < d.rows(); ++i) {
    d.row(i) = normalize_backward(n.unit.row(i).transpose(), d_unit.row(i).transpose(), n.norms(i))
                   .transpose();
  }
  return d;
}

std::vector<double> diagonal_nll(const MatrixXs& logits) {
  std::vector<double> out(static_cast<std::size_t>(logits.rows()));
  for (Index i = 0; i < logits.rows(); ++i) out[static_cast<std::size_t>(i)] = softmax_nll(logits.row(i), i);
  return out;
}

// d(mean_i NLL_i)/d logits, times weight: (softmax - I) * weight / N.
MatrixXs diagonal_nll_grad(const MatrixXs& logits, double weight) {
  MatrixXs g = softmax_rows(logits);
  g.diagonal().array() -= 1.0;
  return g * (weight / static_cast<double>(logits.rows()));
}

void check_unit_rows(const MatrixXs& m, const char* what) {
  for (Index i = 0; i < m.rows(); ++i) {
    if (std::abs(m.row(i).norm() - 1.0) > 1e-6) {
      throw NumericError(std::string(what) + ": row " + std::to_string(i) + " is not unit norm");
    }
  }
}

// tanh(X W^T + b) for a batch of row inputs.
MatrixXs head_forward(const ProjectionHead& head, const MatrixXs& x) {
  MatrixXs a = x * head.weight.transpose();
  a.rowwise() += head.bias.transpose();
  return a.array().tanh().matrix();
}

// Accumulates weight/bias gradients for y = tanh(X W^T + b) and returns dL/dX
// (when want_input_grad).
MatrixXs head_backward(const ProjectionHead& head, const MatrixXs& x, const MatrixXs& y,
                       const MatrixXs& dy, ProjectionHead& grad, bool want_input_grad) {
  const MatrixXs da = dy.cwiseProduct((1.0 - y.array().square()).matrix());
  grad.weight.noalias() += da.transpose() * x;
  grad.bias += da.colwise().sum().transpose();
  if (!want_input_grad) return {};
  return da * head.weight;
}

struct TextViews {
  MatrixXs pooled;             // N x d, no dropout
  MatrixXs scale[2];           // per-view dropout multipliers, N x d
  MatrixXs x[2];               // encoder outputs per view
};

TextViews encode_views(const MiniBatch& batch, const ModelParams& params, double keep_prob,
                       std::uint64_t mask_seed) {
  const Index n = static_cast<Index>(batch.size());
  const Index d = params.dims.embed_dim;
  TextViews v;
  v.pooled.resize(n, d);
  for (int p = 0; p < 2; ++p) v.scale[p].resize(n, d);
  for (Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    v.pooled.row(i) = mean_pool(batch.sentences[ui], params).transpose();
    for (int p = 0; p < 2; ++p) {
      auto mask = DropoutMask::for_instance(d, keep_prob, mask_seed, batch.instance_ids[ui],
                                            static_cast<std::uint64_t>(p));
      v.scale[p].row(i) = mask.scale().transpose();
    }
  }
  for (int p = 0; p < 2; ++p) v.x[p] = v.pooled.cwiseProduct(v.scale[p]);
  return v;
}

MatrixXs gather_features(const MiniBatch& batch, const FeatureTable& features, Index image_dim) {
  if (features.dim() != image_dim) {
    throw DataError("image feature dimension " + std::to_string(features.dim()) +
                    " does not match model d_v " + std::to_string(image_dim));
  }
  MatrixXs f(static_cast<Index>(batch.size()), image_dim);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    f.row(static_cast<Index>(i)) = features.at(batch.image_ids[i]).vector.transpose();
  }
  return f;
}

BatchLossResult run_batch(const MiniBatch& batch, const ModelParams& params, const LossConfig& cfg,
                          const FeatureTable* features, std::uint64_t mask_seed, ParamSet* grad) {
  batch.validate();
  cfg.validate();
  const bool multimodal = batch.kind == BatchKind::kMultimodal;
  if (multimodal && features == nullptr) throw DataError("multimodal batch without image features");

  const TextViews views = encode_views(batch, params, cfg.keep_prob, mask_seed);
  const ParamSet& w = params.value;

  // Textual objective.
  MatrixXs h[2];
  NormalizedRows hn[2];
  for (int p = 0; p < 2; ++p) {
    h[p] = head_forward(w.textual, views.x[p]);
    hn[p] = normalized_rows(h[p], "textual objective");
  }
  const MatrixXs text_logits = (hn[0].unit * hn[1].unit.transpose()) / cfg.tau;

  BatchLossResult result;
  result.per_instance_textual = diagonal_nll(text_logits);

  // Multimodal objective.
  MatrixXs image_in, v;
  NormalizedRows vn;
  MatrixXs s[2], mm_logits[2];
  NormalizedRows sn[2];
  if (multimodal) {
    image_in = gather_features(batch, *features, params.dims.image_dim);
    v = head_forward(w.shared_image, image_in);
    vn = normalized_rows(v, "image projection");
    result.per_instance_multimodal.assign(batch.size(), 0.0);
    for (int p = 0; p < 2; ++p) {
      s[p] = head_forward(w.shared_text, views.x[p]);
      sn[p] = normalized_rows(s[p], "shared text projection");
      mm_logits[p] = (sn[p].unit * vn.unit.transpose()) / cfg.tau_prime;
      const auto nll = diagonal_nll(mm_logits[p]);
      for (std::size_t i = 0; i < nll.size(); ++i) result.per_instance_multimodal[i] += nll[i];
    }
  }
  result.mean_total = combined_loss(result.per_instance_textual, result.per_instance_multimodal, cfg.lambda);
  if (grad == nullptr) return result;

  // Backward. dx[p] collects dL/d(encoder output) for each view.
  MatrixXs dx[2];
  {
    const MatrixXs g = diagonal_nll_grad(text_logits, 1.0);
    MatrixXs dhn[2];
    dhn[0] = g * hn[1].unit / cfg.tau;
    dhn[1] = g.transpose() * hn[0].unit / cfg.tau;
    for (int p = 0; p < 2; ++p) {
      const MatrixXs dh = normalized_rows_backward(hn[p], dhn[p]);
      dx[p] = head_backward(w.textual, views.x[p], h[p], dh, grad->textual, true);
    }
  }
  // With lambda == 0 the shared heads are unreachable; skipping keeps their
  // gradients exactly zero and the text gradients bit-identical to text-only.
  if (multimodal && cfg.lambda != 0.0) {
    MatrixXs dvn = MatrixXs::Zero(vn.unit.rows(), vn.unit.cols());
    for (int p = 0; p < 2; ++p) {
      const MatrixXs g = diagonal_nll_grad(mm_logits[p], cfg.lambda);
      const MatrixXs dsn = g * vn.unit / cfg.tau_prime;
      dvn.noalias() += g.transpose() * sn[p].unit / cfg.tau_prime;
      const MatrixXs ds = normalized_rows_backward(sn[p], dsn);
      dx[p] += head_backward(w.shared_text, views.x[p], s[p], ds, grad->shared_text, true);
    }
    const MatrixXs dv = normalized_rows_backward(vn, dvn);
    // Image features are frozen: no input gradient.
    head_backward(w.shared_image, image_in, v, dv, grad->shared_image, false);
  }

  // Dropout and mean pooling.
  const MatrixXs dpooled = dx[0].cwiseProduct(views.scale[0]) + dx[1].cwiseProduct(views.scale[1]);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& tokens = batch.sentences[i];
    const double inv_len = 1.0 / static_cast<double>(tokens.size());
    for (auto t : tokens) grad->embed.row(t) += dpooled.row(static_cast<Index>(i)) * inv_len;
  }
  return result;
}

}  // namespace

std::vector<double> simcse_batch_loss(const MatrixXs& views_z, const MatrixXs& views_zp, double tau) {
  if (views_z.rows() < 1 || views_z.rows() != views_zp.rows() || views_z.cols() != views_zp.cols()) {
    throw NumericError("simcse_batch_loss: shape mismatch");
  }
  if (!(tau > 0.0)) throw NumericError("simcse_batch_loss: tau must be positive");
  const auto a = normalized_rows(views_z, "simcse_batch_loss");
  const auto b = normalized_rows(views_zp, "simcse_batch_loss");
  return diagonal_nll((a.unit * b.unit.transpose()) / tau);
}

std::vector<double> multimodal_batch_loss(const MatrixXs& shared_z, const MatrixXs& shared_zp,
                                          const MatrixXs& images, double tau_prime) {
  if (shared_z.rows() < 1 || shared_z.rows() != shared_zp.rows() || shared_z.rows() != images.rows() ||
      shared_z.cols() != shared_zp.cols() || shared_z.cols() != images.cols()) {
    throw NumericError("multimodal_batch_loss: shape mismatch");
  }
  if (!(tau_prime > 0.0)) throw NumericError("multimodal_batch_loss: tau_prime must be positive");
  check_unit_rows(shared_z, "multimodal_batch_loss");
  check_unit_rows(shared_zp, "multimodal_batch_loss");
  check_unit_rows(images, "multimodal_batch_loss");
  auto out = diagonal_nll((shared_z * images.transpose()) / tau_prime);
  const auto second = diagonal_nll((shared_zp * images.transpose()) / tau_prime);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += second[i];
  return out;
}

double combined_loss(const std::vector<double>& textual, const std::vector<double>& multimodal,
                     double lambda) {
  if (textual.empty()) throw NumericError("combined_loss: empty loss list");
  if (!multimodal.empty() && multimodal.size() != textual.size()) {
    throw NumericError("combined_loss: length mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < textual.size(); ++i) {
    sum += multimodal.empty() ? textual[i] : textual[i] + lambda * multimodal[i];
  }
  return sum / static_cast<double>(textual.size());
}

BatchLossResult batch_loss_and_grads(const MiniBatch& batch, ModelParams& params,
                                     const LossConfig& cfg, const FeatureTable* features,
                                     std::uint64_t mask_seed) {
  if (!(params.grad.embed.rows() == params.value.embed.rows() &&
        params.grad.embed.cols() == params.value.embed.cols())) {
    throw DataError("gradient slots do not match parameter shapes");
  }
  return run_batch(batch, params, cfg, features, mask_seed, &params.grad);
}

BatchLossResult batch_loss(const MiniBatch& batch, const ModelParams& params,
                           const LossConfig& cfg, const FeatureTable* features,
                           std::uint64_t mask_seed) {
  return run_batch(batch, params, cfg, features, mask_seed, nullptr);
}

}  // namespace mcse
