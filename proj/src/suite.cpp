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

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

#include "mcse/runner.hpp"
#include "text_util.hpp"

namespace mcse {

const std::vector<double>& lambda_grid() {
  static const std::vector<double> grid = {0.001, 0.01, 0.05, 0.1, 0.5};
  return grid;
}

const VariantSummary& SuiteResult::row(const std::string& name) const {
  for (const auto& r : rows) {
    if (r.name == name) return r;
  }
  throw DataError("suite has no variant '" + name + "'");
}

namespace {

struct RunOutcome {
  bool ok = false;
  double test = 0.0;
  std::optional<SpaceAnalysis> space;
  std::string error;
};

TrainConfig apply_variant(const TrainConfig& base, const Variant& v, std::uint64_t seed) {
  TrainConfig cfg = base;
  cfg.seed = seed;
  cfg.objective = v.objective;
  if (v.lambda) cfg.loss.lambda = *v.lambda;
  cfg.shuffle_images = v.shuffle_images;
  if (v.sample_limit > 0) cfg.sample_limit = v.sample_limit;
  return cfg;
}

RunOutcome run_one(const TrainConfig& cfg, const TrainingData& data, const SuiteOptions& options) {
  RunOutcome out;
  try {
    const auto result = train(cfg, data);
    out.test = evaluate_checkpoint(result.best, options.test_tasks).average;
    if (!options.analysis_pairs.empty()) out.space = analyze_embedding_space(result.best, options.analysis_pairs);
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

// Runs fn(i) for i in [0, n) on up to jobs threads. Each call owns its state.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

SuiteResult run_experiment_suite(const TrainConfig& base, const TrainingData& data,
                                 const std::vector<std::uint64_t>& seeds, const std::vector<Variant>& variants,
                                 const SuiteOptions& options) {
  if (variants.empty()) throw DataError("suite: no variants");
  if (seeds.empty()) throw DataError("suite: no seeds");
  if (options.test_tasks.empty()) throw DataError("suite: no test tasks");

  std::vector<RunOutcome> outcomes(variants.size() * seeds.size());
  parallel_for(outcomes.size(), options.jobs, [&](std::size_t i) {
    const auto& v = variants[i / seeds.size()];
    const auto seed = seeds[i % seeds.size()];
    outcomes[i] = run_one(apply_variant(base, v, seed), data, options);
  });

  SuiteResult suite;
  suite.baseline = options.baseline.empty() ? variants.front().name : options.baseline;
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    VariantSummary row;
    row.name = variants[vi].name;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      const auto& o = outcomes[vi * seeds.size() + si];
      if (!o.ok) {
        row.failures.push_back(std::to_string(seeds[si]) + ": " + o.error);
        continue;
      }
      row.seeds.push_back(seeds[si]);
      row.test_spearman.push_back(o.test);
      if (o.space) {
        row.alignment.push_back(o.space->alignment);
        row.uniformity.push_back(o.space->uniformity);
      }
    }
    if (!row.test_spearman.empty()) {
      row.mean = mean(row.test_spearman);
      row.stddev = sample_stddev(row.test_spearman);
    }
    suite.rows.push_back(std::move(row));
  }

  const auto base_it = std::find_if(suite.rows.begin(), suite.rows.end(),
                                    [&](const VariantSummary& r) { return r.name == suite.baseline; });
  if (base_it == suite.rows.end()) throw DataError("suite: baseline '" + suite.baseline + "' is not a variant");
  const auto baseline_scores = base_it->test_spearman;
  for (auto& row : suite.rows) {
    if (row.name == suite.baseline) continue;
    if (row.test_spearman.size() >= 2 && baseline_scores.size() >= 2) {
      row.vs_baseline = welch_t_test(row.test_spearman, baseline_scores, options.alpha);
    }
  }
  return suite;
}

std::string suite_to_csv(const SuiteResult& suite) {
  std::ostringstream out;
  out << "variant,n,mean,std,alignment,uniformity,t,dof,p,significant,failures\n";
  auto opt_mean = [](const std::vector<double>& xs) { return xs.empty() ? std::string() : format_double(mean(xs)); };
  for (const auto& r : suite.rows) {
    out << r.name << ',' << r.test_spearman.size() << ',' << format_double(r.mean) << ',' << format_double(r.stddev)
        << ',' << opt_mean(r.alignment) << ',' << opt_mean(r.uniformity) << ',';
    if (r.vs_baseline) {
      out << format_double(r.vs_baseline->t) << ',' << format_double(r.vs_baseline->dof) << ','
          << format_double(r.vs_baseline->p_value) << ',' << (r.vs_baseline->significant ? "yes" : "no");
    } else {
      out << ",,,";
    }
    out << ',' << r.failures.size() << '\n';
  }
  return out.str();
}

ScaleStudy run_scale_study(const TrainConfig& base, const TrainingData& data,
                           const std::vector<std::uint64_t>& seeds, const std::vector<int>& limits,
                           const SuiteOptions& options) {
  if (data.captions.empty()) throw DataError("scale study needs a caption dataset");
  if (limits.empty()) throw DataError("scale study: empty grid");

  // Caption-only training; the step budget is that of the full set.
  TrainingData captions_only = data;
  captions_only.text.clear();
  const auto full = data.captions.size();
  const auto batch = static_cast<std::size_t>(base.batch_size);
  TrainConfig cfg = base;
  if (cfg.max_steps == 0) cfg.max_steps = static_cast<int>(((full + batch - 1) / batch) * static_cast<std::size_t>(base.epochs));

  ScaleStudy study;
  for (int limit : limits) {
    if (limit < 0) throw DataError("scale study: negative sample limit");
    if (static_cast<std::size_t>(limit) > full) {
      throw DataError("scale study: limit " + std::to_string(limit) + " exceeds dataset size " + std::to_string(full));
    }
    const std::vector<Variant> variants = {{"simcse", Objective::kSimCse, std::nullopt, false, limit},
                                           {"mcse", Objective::kMcse, std::nullopt, false, limit}};
    const auto suite = run_experiment_suite(cfg, captions_only, seeds, variants, options);
    ScalePoint p;
    p.label = limit == 0 ? "full" : std::to_string(limit);
    p.samples = limit == 0 ? full : static_cast<std::size_t>(limit);
    p.simcse_mean = suite.row("simcse").mean;
    p.mcse_mean = suite.row("mcse").mean;
    study.points.push_back(p);
  }
  std::sort(study.points.begin(), study.points.end(),
            [](const ScalePoint& a, const ScalePoint& b) { return a.samples < b.samples; });
  study.advantage_nondecreasing = true;
  for (std::size_t i = 1; i < study.points.size(); ++i) {
    if (study.points[i].advantage() < study.points[i - 1].advantage()) study.advantage_nondecreasing = false;
  }
  study.full_beats_smallest = study.points.back().advantage() > study.points.front().advantage();
  return study;
}

std::string scale_study_to_csv(const ScaleStudy& study) {
  std::ostringstream out;
  out << "samples,label,simcse,mcse,advantage\n";
  for (const auto& p : study.points) {
    out << p.samples << ',' << p.label << ',' << format_double(p.simcse_mean) << ',' << format_double(p.mcse_mean)
        << ',' << format_double(p.advantage()) << '\n';
  }
  out << "# advantage_nondecreasing," << (study.advantage_nondecreasing ? "yes" : "no") << '\n';
  out << "# full_beats_smallest," << (study.full_beats_smallest ? "yes" : "no") << '\n';
  return out.str();
}

}  // namespace mcse
