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

#include <sstream>

#include "mcse/random.hpp"
#include "mcse/runner.hpp"
#include "text_util.hpp"

namespace mcse {

TrainingData load_training_data(const TrainConfig& cfg) {
  TrainingData data;
  if (!cfg.text_corpus.empty()) data.text = load_sentence_corpus(cfg.text_corpus);
  if (!cfg.captions.empty()) {
    if (cfg.features.empty()) throw DataError("captions given without an image feature file");
    data.captions = read_caption_groups(cfg.captions);
    data.features = read_feature_file(cfg.features);
  }
  if (data.text.empty() && data.captions.empty()) throw DataError("no training corpus configured");
  if (cfg.dev_sts.empty()) throw DataError("no dev STS file configured");
  data.dev = read_sts_file(cfg.dev_sts);
  return data;
}

std::string format_log(const std::vector<LogEntry>& log) {
  std::ostringstream out;
  for (const auto& e : log) {
    out << e.step << '\t';
    if (e.is_dev) {
      out << "dev\t" << format_double(e.dev_spearman) << '\n';
    } else {
      out << e.kind << '\t' << format_double(e.loss_textual) << '\t' << format_double(e.loss_multimodal) << '\t'
          << format_double(e.total) << '\n';
    }
  }
  return out.str();
}

SentenceEmbedder checkpoint_embedder(const ModelParams& params) {
  return [&params](const std::string& text) { return embed_for_eval(tokenize(text, params.dims.vocab_size), params); };
}

namespace {

// Multimodal items get ids disjoint from text items so their dropout
// streams never coincide.
constexpr std::uint64_t kMultimodalIdOffset = std::uint64_t{1} << 40;

class Adam {
 public:
  Adam(const ParamSet& shape_like, double lr, double beta1, double beta2, double eps)
      : m_(shape_like), v_(shape_like), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.set_zero();
    v_.set_zero();
  }

  void step(ParamSet& params, const ParamSet& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    auto p = params.tensors();
    auto g = grads.tensors();
    auto m = m_.tensors();
    auto v = v_.tensors();
    for (std::size_t k = 0; k < p.size(); ++k) {
      for (std::size_t i = 0; i < p[k].size(); ++i) {
        const double gi = g[k][i];
        m[k][i] = beta1_ * m[k][i] + (1.0 - beta1_) * gi;
        v[k][i] = beta2_ * v[k][i] + (1.0 - beta2_) * gi * gi;
        p[k][i] -= lr_ * (m[k][i] / c1) / (std::sqrt(v[k][i] / c2) + eps_);
      }
    }
  }

 private:
  ParamSet m_, v_;
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
};

double dev_score(const ModelParams& params, const std::vector<StsPair>& dev) {
  const auto report = sts_evaluate(checkpoint_embedder(params), {{"dev", dev}});
  return report.average;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const TrainingData& data) {
  cfg.validate();
  if (data.dev.empty()) throw DataError("dev STS set is empty");

  // Sentence-image pairs: one caption per image, then the ablations.
  std::vector<SentenceImagePair> pairs;
  if (!data.captions.empty()) {
    pairs = load_multimodal_dataset(data.captions, data.features, cfg.seed);
    if (cfg.sample_limit > 0) pairs = limit_training_samples(pairs, static_cast<std::size_t>(cfg.sample_limit), cfg.seed);
    if (cfg.shuffle_images) pairs = shuffle_image_ablation(pairs, cfg.seed);
  }
  if (data.text.empty() && pairs.empty()) throw DataError("no training data");

  std::vector<TokenIds> text_tokens, pair_tokens;
  for (const auto& r : data.text) text_tokens.push_back(tokenize(r.text, cfg.dims.vocab_size));
  for (const auto& p : pairs) pair_tokens.push_back(tokenize(p.sentence.text, cfg.dims.vocab_size));

  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  int epochs = cfg.epochs;
  if (cfg.max_steps > 0) {
    const auto per_epoch = (text_tokens.size() + batch_size - 1) / batch_size +
                           (pair_tokens.size() + batch_size - 1) / batch_size;
    epochs = static_cast<int>((static_cast<std::size_t>(cfg.max_steps) + per_epoch - 1) / per_epoch);
  }
  auto plan = plan_batches(text_tokens.size(), pair_tokens.size(), batch_size, epochs, derive_seed(cfg.seed, {0x91a}));
  if (cfg.max_steps > 0 && plan.size() > static_cast<std::size_t>(cfg.max_steps)) plan.resize(static_cast<std::size_t>(cfg.max_steps));

  TrainResult result;
  ModelParams params = ModelParams::init(cfg.dims, cfg.seed);
  Adam adam(params.value, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);
  const std::uint64_t hash = config_hash(cfg);
  const bool use_images = cfg.objective == Objective::kMcse;

  std::optional<double> best_dev;
  auto evaluate = [&](std::uint64_t step) {
    const double score = dev_score(params, data.dev);
    LogEntry e;
    e.step = step;
    e.is_dev = true;
    e.kind = "dev";
    e.dev_spearman = score;
    result.log.push_back(e);
    if (!best_dev || score > *best_dev) {
      best_dev = score;
      result.best = Checkpoint{cfg.dims, params.value, step, score, hash, kCheckpointVersion};
    }
  };

  std::uint64_t step = 0;
  for (const auto& desc : plan) {
    ++step;
    MiniBatch batch;
    const bool from_pairs = desc.source == BatchSource::kMultimodal;
    batch.kind = from_pairs && use_images ? BatchKind::kMultimodal : BatchKind::kTextOnly;
    for (auto i : desc.items) {
      batch.sentences.push_back(from_pairs ? pair_tokens[i] : text_tokens[i]);
      batch.instance_ids.push_back(from_pairs ? kMultimodalIdOffset + i : i);
      if (batch.kind == BatchKind::kMultimodal) batch.image_ids.push_back(pairs[i].image_id);
    }

    params.zero_grad();
    const auto loss = batch_loss_and_grads(batch, params, cfg.loss, use_images ? &data.features : nullptr,
                                           derive_seed(cfg.seed, {0xd209, step}));
    if (!std::isfinite(loss.mean_total) || !params.grad.all_finite()) {
      throw TrainingAborted("non-finite loss at step " + std::to_string(step), step);
    }
    adam.step(params.value, params.grad);

    LogEntry e;
    e.step = step;
    e.kind = from_pairs ? "caption" : "text";
    e.loss_textual = loss.mean_textual();
    e.loss_multimodal = loss.mean_multimodal();
    e.total = loss.mean_total;
    result.log.push_back(e);

    if (step % static_cast<std::uint64_t>(cfg.eval_every_steps) == 0) evaluate(step);
  }
  if (step % static_cast<std::uint64_t>(cfg.eval_every_steps) != 0) evaluate(step);

  result.steps = step;
  result.final_params = std::move(params);
  return result;
}

TrainResult train(const TrainConfig& cfg) { return train(cfg, load_training_data(cfg)); }

EvalReport evaluate_checkpoint(const Checkpoint& ckpt, const std::map<std::string, std::vector<StsPair>>& tasks) {
  if (ckpt.format_version != kCheckpointVersion) throw DataError("checkpoint version mismatch");
  const ModelParams params = ckpt.model();
  return sts_evaluate(checkpoint_embedder(params), tasks, StsOptions{true});
}

SpaceAnalysis analyze_embedding_space(const Checkpoint& ckpt, const std::vector<StsPair>& pairs) {
  const ModelParams params = ckpt.model();
  const auto [alignment, uniformity] = alignment_uniformity(checkpoint_embedder(params), pairs);
  return {alignment, uniformity};
}

std::map<std::pair<std::string, int>, double> cross_modal_recall(const Checkpoint& ckpt,
                                                                 const std::vector<SentenceImagePair>& pairs,
                                                                 const FeatureTable& features,
                                                                 const std::vector<int>& ks) {
  const ModelParams params = ckpt.model();
  std::vector<VectorXs> text, images;
  std::vector<std::size_t> identity(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto x = embed_for_eval(tokenize(pairs[i].sentence.text, params.dims.vocab_size), params);
    text.push_back(project(HeadKind::kSharedText, params, x));
    images.push_back(project(HeadKind::kSharedImage, params, features.at(pairs[i].image_id).vector));
    identity[i] = i;
  }
  std::map<std::pair<std::string, int>, double> out;
  for (int k : ks) {
    out[{"text_to_image", k}] = recall_at_k(text, images, identity, k);
    out[{"image_to_text", k}] = recall_at_k(images, text, identity, k);
  }
  return out;
}

}  // namespace mcse
