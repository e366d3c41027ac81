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

// mcse: generate | train | eval | analyze | retrieve | suite

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mcse/config.hpp"
#include "mcse/runner.hpp"
#include "mcse/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// One --key option per field of a flat JSON config. Values given on the
// command line override the config file.
class ConfigFlags {
 public:
  ConfigFlags(CLI::App* app, const json& defaults) : defaults_(defaults) {
    for (const auto& [key, value] : defaults.items()) {
      app->add_option("--" + key, raw_[key], "default: " + value.dump());
    }
    app->add_option("--config", config_path_, "JSON config file");
  }

  json resolve() const {
    json out = config_path_.empty() ? json::object() : mcse::read_json_file(config_path_);
    for (const auto& [key, text] : raw_) {
      if (text.empty()) continue;
      if (defaults_.at(key).is_string()) {
        out[key] = text;
      } else {
        try {
          out[key] = json::parse(text);
        } catch (const json::parse_error&) {
          throw mcse::DataError("--" + key + ": cannot parse '" + text + "'");
        }
      }
    }
    return out;
  }

 private:
  json defaults_;
  std::map<std::string, std::string> raw_;
  std::string config_path_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw mcse::DataError("cannot write " + path.string());
  out << text;
}

void emit(const std::string& csv, const std::string& path) {
  std::cout << csv;
  if (!path.empty()) write_text(path, csv);
}

std::map<std::string, std::vector<mcse::StsPair>> read_tasks(const std::vector<std::string>& paths) {
  std::map<std::string, std::vector<mcse::StsPair>> tasks;
  for (const auto& p : paths) tasks[fs::path(p).stem().string()] = mcse::read_sts_file(p);
  return tasks;
}

mcse::TrainConfig train_config(const ConfigFlags& flags) {
  mcse::TrainConfig cfg;
  mcse::apply_json(cfg, flags.resolve());
  cfg.validate();
  return cfg;
}

int cmd_generate(const ConfigFlags& flags, const std::string& out_dir) {
  mcse::SynthConfig cfg;
  mcse::apply_json(cfg, flags.resolve());
  const auto corpus = mcse::generate_grounded_corpus(cfg);
  fs::create_directories(out_dir);
  mcse::write_grounded_corpus(out_dir, corpus);

  // A train config pointing at the generated files.
  const fs::path dir = fs::absolute(out_dir);
  mcse::TrainConfig train;
  train.dims.image_dim = cfg.feature_dim;
  train.text_corpus = (dir / "text_only.txt").string();
  train.captions = (dir / "captions.tsv").string();
  train.features = (dir / "features.txt").string();
  train.dev_sts = (dir / "sts_dev.tsv").string();
  write_text(dir / "train.json", mcse::to_json(train).dump(2) + "\n");
  write_text(dir / "synth.json", mcse::to_json(cfg).dump(2) + "\n");
  std::cout << "wrote corpus to " << dir.string() << '\n';
  return 0;
}

int cmd_train(const ConfigFlags& flags, const std::string& out_dir) {
  const auto cfg = train_config(flags);
  const auto result = mcse::train(cfg);
  fs::create_directories(out_dir);
  const fs::path dir = out_dir;
  write_text(dir / "train_log.tsv", mcse::format_log(result.log));
  mcse::save_checkpoint(dir / "best.ckpt", result.best);
  write_text(dir / "config.json", mcse::to_json(cfg).dump(2) + "\n");
  const auto report = mcse::evaluate_checkpoint(result.best, {{"dev", mcse::read_sts_file(cfg.dev_sts)}});
  write_text(dir / "dev_report.csv", mcse::report_to_csv(report));
  std::cout << "steps " << result.steps << ", best step " << result.best.step << ", dev spearman "
            << result.best.dev_metric << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal contrastive sentence embeddings"};
  app.require_subcommand(1);

  const json synth_defaults = mcse::to_json(mcse::SynthConfig{});
  const json train_defaults = mcse::to_json(mcse::TrainConfig{});

  auto* gen = app.add_subcommand("generate", "write a synthetic grounded corpus");
  ConfigFlags gen_flags(gen, synth_defaults);
  std::string gen_out;
  gen->add_option("--out", gen_out, "output directory")->required();

  auto* tr = app.add_subcommand("train", "train one model");
  ConfigFlags train_flags(tr, train_defaults);
  std::string train_out;
  tr->add_option("--out", train_out, "output directory")->required();

  auto* ev = app.add_subcommand("eval", "STS evaluation of a checkpoint");
  std::string ckpt_path, csv_path;
  std::vector<std::string> sts_paths;
  ev->add_option("--checkpoint", ckpt_path)->required();
  ev->add_option("--sts", sts_paths, "STS files; the file stem names the task")->required();
  ev->add_option("--csv", csv_path);

  auto* an = app.add_subcommand("analyze", "alignment and uniformity of a checkpoint");
  std::string analyze_sts;
  an->add_option("--checkpoint", ckpt_path)->required();
  an->add_option("--sts", analyze_sts, "STS file; pairs with gold > 4 are positives")->required();
  an->add_option("--csv", csv_path);

  auto* re = app.add_subcommand("retrieve", "nearest sentences, or cross-modal recall@k");
  std::string query, corpus_path, captions_path, features_path;
  int top_k = 5;
  std::vector<int> ks = {1, 5, 10};
  std::uint64_t retrieve_seed = 1;
  re->add_option("--checkpoint", ckpt_path)->required();
  re->add_option("--query", query);
  re->add_option("--corpus", corpus_path, "one sentence per line");
  re->add_option("-k,--top_k", top_k);
  re->add_option("--captions", captions_path);
  re->add_option("--features", features_path);
  re->add_option("--ks", ks, "recall cutoffs")->delimiter(',');
  re->add_option("--seed", retrieve_seed, "caption choice per image");
  re->add_option("--csv", csv_path);

  auto* su = app.add_subcommand("suite", "multi-seed comparison, lambda grid, data-scale study");
  ConfigFlags suite_flags(su, train_defaults);
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::vector<std::string> test_paths;
  std::vector<int> limits = {100, 500, 1000, 5000, 0};
  bool with_grid = false, scale = false;
  int jobs = 1;
  su->add_option("--seeds", seeds)->delimiter(',');
  su->add_option("--test_sts", test_paths, "test STS files")->required();
  su->add_flag("--lambda_grid", with_grid, "add one mcse variant per grid lambda");
  su->add_flag("--scale", scale, "run the data-scale study instead");
  su->add_option("--limits", limits, "sample limits, 0 = full")->delimiter(',');
  su->add_option("--jobs", jobs);
  su->add_option("--csv", csv_path);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(gen_flags, gen_out);
    if (tr->parsed()) return cmd_train(train_flags, train_out);

    if (ev->parsed()) {
      const auto ckpt = mcse::load_checkpoint(ckpt_path);
      emit(mcse::report_to_csv(mcse::evaluate_checkpoint(ckpt, read_tasks(sts_paths))), csv_path);
      return 0;
    }

    if (an->parsed()) {
      const auto ckpt = mcse::load_checkpoint(ckpt_path);
      const auto space = mcse::analyze_embedding_space(ckpt, mcse::read_sts_file(analyze_sts));
      emit("checkpoint,alignment,uniformity\n" + ckpt_path + ',' + std::to_string(space.alignment) + ',' +
               std::to_string(space.uniformity) + '\n',
           csv_path);
      return 0;
    }

    if (re->parsed()) {
      const auto ckpt = mcse::load_checkpoint(ckpt_path);
      const auto params = ckpt.model();
      std::ostringstream out;
      if (!query.empty()) {
        if (corpus_path.empty()) throw mcse::DataError("--query needs --corpus");
        std::vector<std::string> corpus;
        std::vector<mcse::VectorXs> embs;
        const auto embed = mcse::checkpoint_embedder(params);
        for (const auto& r : mcse::load_sentence_corpus(corpus_path)) {
          corpus.push_back(r.text);
          embs.push_back(embed(r.text));
        }
        out << "rank,similarity,sentence\n";
        int rank = 0;
        for (const auto& hit : mcse::nearest_sentences(query, embed(query), corpus, embs, static_cast<std::size_t>(top_k))) {
          out << ++rank << ',' << hit.score << ",\"" << hit.text << "\"\n";
        }
      } else {
        if (captions_path.empty() || features_path.empty()) {
          throw mcse::DataError("retrieve needs --query and --corpus, or --captions and --features");
        }
        const auto features = mcse::read_feature_file(features_path);
        const auto pairs =
            mcse::load_multimodal_dataset(mcse::read_caption_groups(captions_path), features, retrieve_seed);
        out << "direction,k,recall\n";
        for (const auto& [key, r] : mcse::cross_modal_recall(ckpt, pairs, features, ks)) {
          out << key.first << ',' << key.second << ',' << r << '\n';
        }
      }
      emit(out.str(), csv_path);
      return 0;
    }

    if (su->parsed()) {
      const auto cfg = train_config(suite_flags);
      const auto data = mcse::load_training_data(cfg);
      mcse::SuiteOptions options;
      options.test_tasks = read_tasks(test_paths);
      options.jobs = jobs;
      if (scale) {
        emit(mcse::scale_study_to_csv(mcse::run_scale_study(cfg, data, seeds, limits, options)), csv_path);
        return 0;
      }
      for (const auto& [name, pairs] : options.test_tasks) {
        options.analysis_pairs.insert(options.analysis_pairs.end(), pairs.begin(), pairs.end());
      }
      std::vector<mcse::Variant> variants = {{"simcse", mcse::Objective::kSimCse, std::nullopt, false, 0},
                                             {"mcse", mcse::Objective::kMcse, std::nullopt, false, 0},
                                             {"mcse_shuffled", mcse::Objective::kMcse, std::nullopt, true, 0}};
      if (with_grid) {
        for (double lambda : mcse::lambda_grid()) {
          std::ostringstream name;
          name << "mcse_lambda_" << lambda;
          variants.push_back({name.str(), mcse::Objective::kMcse, lambda, false, 0});
        }
      }
      const auto result = mcse::run_experiment_suite(cfg, data, seeds, variants, options);
      emit(mcse::suite_to_csv(result), csv_path);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
