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

// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "mcse/config.hpp"
#include "mcse/runner.hpp"
#include "mcse/synth.hpp"
#include "test_support.hpp"

using namespace mcse;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x, int precision = 6) {
  std::ostringstream s;
  s.precision(precision);
  s << x;
  return s.str();
}

VectorXs unit2(double x, double y) {
  VectorXs v(2);
  v << x, y;
  return v;
}

TrainingData training_data(const GroundedCorpus& corpus, bool with_text) {
  TrainingData data;
  if (with_text) {
    for (std::size_t i = 0; i < corpus.text_only.size(); ++i) {
      data.text.push_back({std::to_string(i + 1), corpus.text_only[i]});
    }
  }
  data.captions = corpus.captions;
  data.features = corpus.features;
  data.dev = corpus.sts_dev;
  return data;
}

Verdict gradient_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto fixture = testing::make_grad_fixture(ModelDims{8, 4, 6, 32}, 4, 0.05);
  const auto r = testing::check_gradients(fixture);
  const double secs = seconds_since(t0);
  return {r.max_relative_error < 1e-4 && secs < 10.0,
          "max relative error " + fmt(r.max_relative_error) + " over " + std::to_string(r.checked) +
              " parameters (< 1e-4), " + fmt(secs, 3) + " s (< 10 s)"};
}

Verdict exact_reductions() {
  const auto single = testing::make_grad_fixture(ModelDims{8, 4, 6, 32}, 1, 0.05);
  const auto r1 = batch_loss(single.batch, single.params, single.loss, &single.features, single.mask_seed);
  const bool zero = r1.per_instance_textual[0] == 0.0 && r1.per_instance_multimodal[0] == 0.0;

  SynthConfig sc;
  sc.num_topics = 4;
  sc.num_images = 300;
  sc.num_text_only_sentences = 900;
  sc.feature_dim = 12;
  sc.sts_test_pairs = 40;
  sc.sts_dev_pairs = 40;
  const auto corpus = generate_grounded_corpus(sc);
  const auto data = training_data(corpus, true);
  TrainConfig cfg;
  cfg.dims = ModelDims{16, 8, 12, 1024};
  cfg.batch_size = 16;
  cfg.max_steps = 500;
  cfg.eval_every_steps = 100;
  cfg.loss.lambda = 0.0;
  cfg.objective = Objective::kMcse;
  const auto m = train(cfg, data);
  cfg.objective = Objective::kSimCse;
  const auto s = train(cfg, data);

  // Every log field except the reported multimodal loss, which MCSE mode
  // still measures at lambda = 0.
  auto strip = [](std::vector<LogEntry> log) {
    for (auto& e : log) e.loss_multimodal = 0.0;
    return format_log(log);
  };
  std::size_t steps = 0;
  for (const auto& e : m.log) steps += !e.is_dev;
  const bool same_log = strip(m.log) == strip(s.log);
  const bool same_params = serialize_checkpoint({cfg.dims, m.final_params.value, 0, 0, 0}) ==
                           serialize_checkpoint({cfg.dims, s.final_params.value, 0, 0, 0});
  return {zero && same_log && same_params && steps == 500,
          std::string("N=1 losses exactly 0: ") + (zero ? "yes" : "no") + "; lambda=0 vs simcse over " +
              std::to_string(steps) + " steps: log " + (same_log ? "identical" : "differs") + ", parameters " +
              (same_params ? "bitwise identical" : "differ")};
}

Verdict temperature_limit() {
  Rng rng(3);
  MatrixXs z(8, 16), zp(8, 16);
  for (Index i = 0; i < z.size(); ++i) {
    z.data()[i] = standard_normal(rng);
    zp.data()[i] = standard_normal(rng);
  }
  double worst = 0;
  for (double l : simcse_batch_loss(z, zp, 1e9)) worst = std::max(worst, std::abs(l - std::log(8.0)));
  auto fixture = testing::make_grad_fixture(ModelDims{8, 4, 6, 32}, 8, 0.0);
  fixture.loss.tau = 1e9;
  for (double l : batch_loss(fixture.batch, fixture.params, fixture.loss, &fixture.features, 1).per_instance_textual) {
    worst = std::max(worst, std::abs(l - std::log(8.0)));
  }
  return {worst < 1e-6, "max |l_i - ln 8| = " + fmt(worst) + " (< 1e-6)"};
}

Verdict metric_closed_forms() {
  const double al = alignment_loss({{unit2(1, 0), unit2(0, 1)}});
  const double un = uniformity_loss({unit2(1, 0), unit2(-1, 0)});
  const double rho = spearman({1, 2, 3, 4}, {2, 1, 4, 3});
  MatrixXs s(3, 3);
  s << .9, .1, .0, .2, .8, .1, .3, .4, .2;
  const double rec = recall_at_k(s, {0, 1, 2}, 1);
  const bool ok = std::abs(al - 2.0) <= 1e-9 && std::abs(un + 8.0) <= 1e-9 && std::abs(rho - 0.6) <= 1e-12 &&
                  rec == 2.0 / 3.0;
  return {ok, "alignment " + fmt(al, 12) + ", uniformity " + fmt(un, 12) + ", spearman " + fmt(rho, 15) +
                  ", recall@1 " + fmt(rec, 15)};
}

Verdict oracle_equivalence() {
  Rng rng(5);
  double worst_rho = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(50), y(50);
    for (int i = 0; i < 50; ++i) {
      x[i] = std::round(uniform(rng, 0, 20));
      y[i] = 0.5 * x[i] + uniform(rng, -4, 4);
    }
    worst_rho = std::max(worst_rho, std::abs(spearman(x, y) - testing::brute_force_spearman(x, y)));
  }

  int mismatches = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<VectorXs> corpus_embs, queries;
    std::vector<std::string> corpus;
    for (int i = 0; i < 100; ++i) {
      VectorXs v(6), q(6);
      for (Index k = 0; k < 6; ++k) v(k) = standard_normal(rng), q(k) = standard_normal(rng);
      corpus_embs.push_back(v);
      queries.push_back(q);
      corpus.push_back("sentence " + std::to_string(i));
    }
    const auto self = uniform_index(rng, 100);
    std::vector<double> scores;
    for (const auto& c : corpus_embs) scores.push_back(cosine_sim(corpus_embs[self], c));
    std::vector<bool> excluded(100, false);
    excluded[self] = true;
    const auto hits = nearest_sentences(corpus[self], corpus_embs[self], corpus, corpus_embs, 10);
    const auto expected = testing::brute_force_top_k(scores, 10, excluded);
    for (std::size_t i = 0; i < expected.size(); ++i) mismatches += hits.at(i).index != expected[i];

    std::vector<std::size_t> truth(100);
    for (auto& t : truth) t = uniform_index(rng, 100);
    for (int k : {1, 5, 10, 50}) {
      double found = 0;
      for (std::size_t i = 0; i < 100; ++i) {
        std::vector<double> s;
        for (const auto& c : corpus_embs) s.push_back(cosine_sim(queries[i], c));
        const auto top = testing::brute_force_top_k(s, static_cast<std::size_t>(k));
        found += std::find(top.begin(), top.end(), truth[i]) != top.end();
      }
      mismatches += recall_at_k(queries, corpus_embs, truth, k) != found / 100;
    }
  }
  return {worst_rho <= 1e-10 && mismatches == 0,
          "spearman max deviation " + fmt(worst_rho) + " (<= 1e-10), retrieval mismatches " +
              std::to_string(mismatches)};
}

struct DirectionalResult {
  Verdict table1;
  Verdict shuffling;
};

DirectionalResult directional() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto corpus = generate_grounded_corpus(SynthConfig{});
  const auto data = training_data(corpus, true);
  TrainConfig cfg;
  cfg.loss.lambda = 0.01;
  SuiteOptions opt;
  opt.test_tasks = {{"test", corpus.sts_test}};
  opt.analysis_pairs = corpus.sts_test;
  const std::vector<Variant> variants = {{"simcse", Objective::kSimCse, std::nullopt, false, 0},
                                         {"mcse", Objective::kMcse, std::nullopt, false, 0},
                                         {"mcse_shuffled", Objective::kMcse, std::nullopt, true, 0}};
  const auto suite = run_experiment_suite(cfg, data, {1, 2, 3, 4, 5}, variants, opt);
  const double secs = seconds_since(t0);
  std::cout << suite_to_csv(suite);

  const auto& s = suite.row("simcse");
  const auto& m = suite.row("mcse");
  const auto& sh = suite.row("mcse_shuffled");
  const bool complete = s.failures.empty() && m.failures.empty() && sh.failures.empty();
  const double s_al = mean(s.alignment), m_al = mean(m.alignment);
  const double s_un = mean(s.uniformity), m_un = mean(m.uniformity);
  DirectionalResult out;
  out.table1.pass = complete && m.mean >= s.mean && m_al <= s_al && std::abs(m_un - s_un) <= 0.5 &&
                    m.vs_baseline.has_value() && secs < 300;
  out.table1.detail = "spearman mcse " + fmt(m.mean) + " vs simcse " + fmt(s.mean) + " (p " +
                      (m.vs_baseline ? fmt(m.vs_baseline->p_value, 3) : std::string("n/a")) + "); alignment " +
                      fmt(m_al) + " vs " + fmt(s_al) + "; uniformity " + fmt(m_un) + " vs " + fmt(s_un) +
                      " (|diff| <= 0.5); suite " + fmt(secs, 3) + " s (< 300 s)";
  out.shuffling.pass = complete && sh.mean < m.mean;
  out.shuffling.detail = "spearman shuffled " + fmt(sh.mean) + " < matched " + fmt(m.mean);
  return out;
}

Verdict data_scale() {
  // A caption corpus large enough for every grid point, with more topics
  // than the default so that grounding needs data to pay off.
  SynthConfig sc;
  sc.num_topics = 32;
  sc.words_per_topic = 20;
  sc.num_images = 8000;
  sc.num_text_only_sentences = 100;
  const auto corpus = generate_grounded_corpus(sc);
  TrainConfig cfg;
  cfg.loss.lambda = 0.01;
  SuiteOptions opt;
  opt.test_tasks = {{"test", corpus.sts_test}};
  const auto study = run_scale_study(cfg, training_data(corpus, false), {1, 2, 3, 4, 5}, {100, 500, 1000, 5000, 0}, opt);
  std::cout << scale_study_to_csv(study);
  return {study.full_beats_smallest, "advantage at full " + fmt(study.points.back().advantage()) + " vs n=100 " +
                                         fmt(study.points.front().advantage()) + "; monotone: " +
                                         (study.advantage_nondecreasing ? "yes" : "no")};
}

Verdict reproducibility() {
  const fs::path dir = testing::scratch_dir("acceptance_repro");
  const std::string cli = MCSE_CLI_PATH;
  auto run = [&](const std::string& args) {
    const std::string cmd = "\"" + cli + "\" " + args + " > \"" + (dir / "cli.out").string() + "\" 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  bool ok = run("generate --out \"" + (dir / "corpus").string() +
                "\" --num_images 200 --num_text_only_sentences 600 --sts_dev_pairs 50 --sts_test_pairs 50");
  const auto config = (dir / "corpus" / "train.json").string();
  ok = ok && run("train --config \"" + config + "\" --lambda 0.05 --max_steps 60 --eval_every_steps 20 --out \"" +
                 (dir / "a").string() + "\"");
  ok = ok && run("train --config \"" + config + "\" --lambda 0.05 --max_steps 60 --eval_every_steps 20 --out \"" +
                 (dir / "b").string() + "\"");
  if (!ok) return {false, "CLI invocation failed, see " + (dir / "cli.out").string()};
  const bool logs = testing::read_bytes(dir / "a" / "train_log.tsv") == testing::read_bytes(dir / "b" / "train_log.tsv");
  const bool ckpts = testing::read_bytes(dir / "a" / "best.ckpt") == testing::read_bytes(dir / "b" / "best.ckpt");
  const bool nonempty = !testing::read_bytes(dir / "a" / "best.ckpt").empty();
  return {logs && ckpts && nonempty, std::string("two train runs: logs ") + (logs ? "identical" : "differ") +
                                         ", checkpoints " + (ckpts ? "identical" : "differ")};
}

Verdict protocol_fidelity() {
  const auto ex = testing::two_subset_example();
  const auto report = sts_evaluate(ex.embedder(), {{"task", ex.pairs}}, {true});
  double subset_mean = 0;
  for (const auto& [name, rho] : report.per_subset.at("task")) subset_mean += rho / 2;
  const double all = report.per_task_spearman.at("task");
  return {all < subset_mean, "concatenated " + fmt(all) + " < mean of subsets " + fmt(subset_mean)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const std::string& name, const std::function<Verdict()>& fn) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failures += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " " << name << ": " << v.detail << std::endl;
  };

  report(1, "gradient oracle", gradient_oracle);
  report(2, "exact reductions", exact_reductions);
  report(3, "temperature limit", temperature_limit);
  report(4, "metric closed forms", metric_closed_forms);
  report(5, "oracle equivalence", oracle_equivalence);
  DirectionalResult dir;
  report(6, "grounding beats text-only", [&] {
    dir = directional();
    return dir.table1;
  });
  report(7, "shuffled images", [&] { return dir.shuffling; });
  report(8, "data scale", data_scale);
  report(9, "reproducibility", reproducibility);
  report(10, "protocol fidelity", protocol_fidelity);

  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << std::endl;
  return failures == 0 ? 0 : 1;
}
