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

// Training loop, checkpoints and multi-seed experiment suites.

#ifndef MCSE_RUNNER_HPP_
#define MCSE_RUNNER_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcse/data_io.hpp"
#include "mcse/metrics.hpp"
#include "mcse/model.hpp"
#include "mcse/objectives.hpp"

namespace mcse {

// kSimCse trains every batch with the textual objective only; caption
// batches are used as plain sentences. kMcse adds the multimodal objective
// on caption batches.
enum class Objective { kSimCse, kMcse };

const char* objective_name(Objective o);
Objective parse_objective(const std::string& name);

struct TrainConfig {
  LossConfig loss;
  Objective objective = Objective::kMcse;
  double learning_rate = 1e-3;
  int batch_size = 64;
  int epochs = 3;
  // > 0: train for exactly this many steps, cycling epochs as needed.
  int max_steps = 0;
  int eval_every_steps = 125;
  ModelDims dims;
  std::uint64_t seed = 1;

  std::string text_corpus;  // optional
  std::string captions;     // optional
  std::string features;     // required with captions
  std::string dev_sts;

  bool shuffle_images = false;
  // > 0: keep this many sentence-image pairs.
  int sample_limit = 0;

  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// Stable hash of every field that influences training.
std::uint64_t config_hash(const TrainConfig& cfg);

// Everything a run reads, held in memory.
struct TrainingData {
  std::vector<SentenceRecord> text;
  std::vector<CaptionGroup> captions;
  FeatureTable features;
  std::vector<StsPair> dev;
};

TrainingData load_training_data(const TrainConfig& cfg);

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelDims dims;
  ParamSet params;
  std::uint64_t step = 0;
  double dev_metric = 0.0;
  std::uint64_t config_hash = 0;
  std::uint32_t format_version = kCheckpointVersion;

  ModelParams model() const;
};

std::vector<char> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::vector<char>& bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct LogEntry {
  std::uint64_t step = 0;
  bool is_dev = false;
  std::string kind;  // batch source, or "dev"
  double loss_textual = 0.0;
  double loss_multimodal = 0.0;  // mean lM; 0 when not computed
  double total = 0.0;
  double dev_spearman = 0.0;
};

// One tab-separated line per entry: "step kind loss_S loss_M total" or
// "step dev spearman".
std::string format_log(const std::vector<LogEntry>& log);

class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(const std::string& what, std::uint64_t step) : std::runtime_error(what), step_(step) {}
  std::uint64_t step() const { return step_; }

 private:
  std::uint64_t step_;
};

struct TrainResult {
  Checkpoint best;
  std::vector<LogEntry> log;
  ModelParams final_params;
  std::uint64_t steps = 0;
};

// Deterministic function of (cfg, data): Adam on the mean batch loss, dev
// Spearman every eval_every_steps steps and after the last step, keeping
// the best-scoring snapshot (earliest on ties).
TrainResult train(const TrainConfig& cfg, const TrainingData& data);
TrainResult train(const TrainConfig& cfg);

SentenceEmbedder checkpoint_embedder(const ModelParams& params);

EvalReport evaluate_checkpoint(const Checkpoint& ckpt, const std::map<std::string, std::vector<StsPair>>& tasks);

struct SpaceAnalysis {
  double alignment = 0.0;
  double uniformity = 0.0;
};

SpaceAnalysis analyze_embedding_space(const Checkpoint& ckpt, const std::vector<StsPair>& pairs);

// Text-to-image and image-to-text recall@k in the shared space, no dropout.
std::map<std::pair<std::string, int>, double> cross_modal_recall(const Checkpoint& ckpt,
                                                                 const std::vector<SentenceImagePair>& pairs,
                                                                 const FeatureTable& features,
                                                                 const std::vector<int>& ks);

// A named change to the base configuration.
struct Variant {
  std::string name;
  Objective objective = Objective::kMcse;
  std::optional<double> lambda;
  bool shuffle_images = false;
  int sample_limit = 0;
};

// The lambda grid exposed for tuning on the dev set.
const std::vector<double>& lambda_grid();

struct VariantSummary {
  std::string name;
  std::vector<std::uint64_t> seeds;
  std::vector<double> test_spearman;  // average over tasks, x100, per seed
  std::vector<double> alignment;
  std::vector<double> uniformity;
  std::vector<std::string> failures;  // "seed: message"
  double mean = 0.0;
  double stddev = 0.0;
  std::optional<TTestResult> vs_baseline;
};

struct SuiteResult {
  std::string baseline;
  std::vector<VariantSummary> rows;

  const VariantSummary& row(const std::string& name) const;
};

struct SuiteOptions {
  std::string baseline;                       // defaults to the first variant
  std::map<std::string, std::vector<StsPair>> test_tasks;
  std::vector<StsPair> analysis_pairs;        // alignment/uniformity; skipped when empty
  double alpha = 0.05;
  int jobs = 1;
};

SuiteResult run_experiment_suite(const TrainConfig& base, const TrainingData& data,
                                 const std::vector<std::uint64_t>& seeds, const std::vector<Variant>& variants,
                                 const SuiteOptions& options);

// variant,n,mean,std,alignment,uniformity,t,dof,p,significant,failures
std::string suite_to_csv(const SuiteResult& suite);

struct ScalePoint {
  std::string label;  // the limit, or "full"
  std::size_t samples = 0;
  double simcse_mean = 0.0;
  double mcse_mean = 0.0;
  double advantage() const { return mcse_mean - simcse_mean; }
};

struct ScaleStudy {
  std::vector<ScalePoint> points;
  bool advantage_nondecreasing = false;
  bool full_beats_smallest = false;
};

// Caption-only training at each sample limit (0 means full), every run for
// the same number of steps as the full set.
ScaleStudy run_scale_study(const TrainConfig& base, const TrainingData& data,
                           const std::vector<std::uint64_t>& seeds, const std::vector<int>& limits,
                           const SuiteOptions& options);

std::string scale_study_to_csv(const ScaleStudy& study);

}  // namespace mcse

#endif  // MCSE_RUNNER_HPP_
