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

#include "mcse/config.hpp"

#include <fstream>

#include "mcse/random.hpp"

namespace mcse {

const char* objective_name(Objective o) { return o == Objective::kSimCse ? "simcse" : "mcse"; }

Objective parse_objective(const std::string& name) {
  if (name == "simcse") return Objective::kSimCse;
  if (name == "mcse") return Objective::kMcse;
  throw DataError("unknown objective '" + name + "' (expected simcse or mcse)");
}

void TrainConfig::validate() const {
  loss.validate();
  if (!(learning_rate > 0.0)) throw DataError("learning_rate must be positive");
  if (batch_size < 1) throw DataError("batch_size must be at least 1");
  if (epochs < 1) throw DataError("epochs must be at least 1");
  if (max_steps < 0) throw DataError("max_steps must be non-negative");
  if (eval_every_steps < 1) throw DataError("eval_every_steps must be at least 1");
  if (sample_limit < 0) throw DataError("sample_limit must be non-negative");
  if (dims.embed_dim < 1 || dims.shared_dim < 1 || dims.image_dim < 1 || dims.vocab_size < 1) {
    throw DataError("model dimensions must be positive");
  }
}

nlohmann::json to_json(const TrainConfig& c) {
  return {
      {"tau", c.loss.tau},
      {"tau_prime", c.loss.tau_prime},
      {"lambda", c.loss.lambda},
      {"keep_prob", c.loss.keep_prob},
      {"objective", objective_name(c.objective)},
      {"learning_rate", c.learning_rate},
      {"batch_size", c.batch_size},
      {"epochs", c.epochs},
      {"max_steps", c.max_steps},
      {"eval_every_steps", c.eval_every_steps},
      {"embed_dim", c.dims.embed_dim},
      {"shared_dim", c.dims.shared_dim},
      {"image_dim", c.dims.image_dim},
      {"vocab_size", c.dims.vocab_size},
      {"seed", c.seed},
      {"text_corpus", c.text_corpus},
      {"captions", c.captions},
      {"features", c.features},
      {"dev_sts", c.dev_sts},
      {"shuffle_images", c.shuffle_images},
      {"sample_limit", c.sample_limit},
      {"adam_beta1", c.adam_beta1},
      {"adam_beta2", c.adam_beta2},
      {"adam_epsilon", c.adam_epsilon},
  };
}

void apply_json(TrainConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("train config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "tau") c.loss.tau = v.get<double>();
      else if (key == "tau_prime") c.loss.tau_prime = v.get<double>();
      else if (key == "lambda") c.loss.lambda = v.get<double>();
      else if (key == "keep_prob") c.loss.keep_prob = v.get<double>();
      else if (key == "objective") c.objective = parse_objective(v.get<std::string>());
      else if (key == "learning_rate") c.learning_rate = v.get<double>();
      else if (key == "batch_size") c.batch_size = v.get<int>();
      else if (key == "epochs") c.epochs = v.get<int>();
      else if (key == "max_steps") c.max_steps = v.get<int>();
      else if (key == "eval_every_steps") c.eval_every_steps = v.get<int>();
      else if (key == "embed_dim") c.dims.embed_dim = v.get<Index>();
      else if (key == "shared_dim") c.dims.shared_dim = v.get<Index>();
      else if (key == "image_dim") c.dims.image_dim = v.get<Index>();
      else if (key == "vocab_size") c.dims.vocab_size = v.get<Index>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "text_corpus") c.text_corpus = v.get<std::string>();
      else if (key == "captions") c.captions = v.get<std::string>();
      else if (key == "features") c.features = v.get<std::string>();
      else if (key == "dev_sts") c.dev_sts = v.get<std::string>();
      else if (key == "shuffle_images") c.shuffle_images = v.get<bool>();
      else if (key == "sample_limit") c.sample_limit = v.get<int>();
      else if (key == "adam_beta1") c.adam_beta1 = v.get<double>();
      else if (key == "adam_beta2") c.adam_beta2 = v.get<double>();
      else if (key == "adam_epsilon") c.adam_epsilon = v.get<double>();
      else throw DataError("unknown train config key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw DataError("bad value for train config key '" + key + "': " + e.what());
    }
  }
}

std::uint64_t config_hash(const TrainConfig& cfg) { return fnv1a64(to_json(cfg).dump()); }

nlohmann::json to_json(const SynthConfig& c) {
  return {
      {"num_topics", c.num_topics},
      {"words_per_topic", c.words_per_topic},
      {"min_sentence_length", c.min_sentence_length},
      {"max_sentence_length", c.max_sentence_length},
      {"num_images", c.num_images},
      {"captions_per_image", c.captions_per_image},
      {"num_text_only_sentences", c.num_text_only_sentences},
      {"feature_dim", c.feature_dim},
      {"feature_noise", c.feature_noise},
      {"noise_word_rate", c.noise_word_rate},
      {"sts_test_pairs", c.sts_test_pairs},
      {"sts_dev_pairs", c.sts_dev_pairs},
      {"vocab_budget", c.vocab_budget},
      {"seed", c.seed},
  };
}

void apply_json(SynthConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("synth config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "num_topics") c.num_topics = v.get<int>();
      else if (key == "words_per_topic") c.words_per_topic = v.get<int>();
      else if (key == "min_sentence_length") c.min_sentence_length = v.get<int>();
      else if (key == "max_sentence_length") c.max_sentence_length = v.get<int>();
      else if (key == "num_images") c.num_images = v.get<int>();
      else if (key == "captions_per_image") c.captions_per_image = v.get<int>();
      else if (key == "num_text_only_sentences") c.num_text_only_sentences = v.get<int>();
      else if (key == "feature_dim") c.feature_dim = v.get<Index>();
      else if (key == "feature_noise") c.feature_noise = v.get<double>();
      else if (key == "noise_word_rate") c.noise_word_rate = v.get<double>();
      else if (key == "sts_test_pairs") c.sts_test_pairs = v.get<int>();
      else if (key == "sts_dev_pairs") c.sts_dev_pairs = v.get<int>();
      else if (key == "vocab_budget") c.vocab_budget = v.get<int>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else throw DataError("unknown synth config key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw DataError("bad value for synth config key '" + key + "': " + e.what());
    }
  }
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("config file " + path.string() + ": " + e.what());
  }
}

}  // namespace mcse
