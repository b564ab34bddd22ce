#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "affect/config.hpp"
#include "affect/errors.hpp"
#include "affect/pipeline.hpp"

namespace {

affect::PipelineConfig load_config(const std::string& config_path, bool seed_set, std::uint64_t seed) {
  affect::PipelineConfig config = config_path.empty()
                                      ? affect::PipelineConfig{}
                                      : affect::PipelineConfig::from_file(config_path);
  if (seed_set) config.seed = seed;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"context-dependent multimodal arousal/valence pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "workspace";
  std::uint64_t seed = 0;
  bool seed_set = false;
  app.add_option("--config", config_path, "flat key = value config file")->expected(1);
  app.add_option("--out", out_dir, "workspace directory (data/, checkpoints/, features/, reports/)");
  auto* seed_opt = app.add_option("--seed", seed, "overrides the config seed");

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic dataset");

  std::string train_stage;
  auto* train = app.add_subcommand("train", "train one stage and write its checkpoint");
  train->add_option("--stage", train_stage,
                    "text|visual|audio|context-text|context-visual|context-audio|fusion")
      ->required();

  std::string extract_stage;
  auto* extract = app.add_subcommand("extract-features", "write per-utterance features for both splits");
  extract->add_option("--stage", extract_stage, "text|visual|audio")->required();

  std::string eval_stage, eval_split = "validation";
  auto* evaluate = app.add_subcommand("evaluate", "write the metric report line for one model");
  evaluate->add_option("--stage", eval_stage, "stage to evaluate")->required();
  evaluate->add_option("--split", eval_split, "train|validation");

  auto* grad = app.add_subcommand("grad-check", "run the gradient verification suite");

  CLI11_PARSE(app, argc, argv);
  seed_set = seed_opt->count() > 0;

  try {
    affect::PipelineConfig config = load_config(config_path, seed_set, seed);
    affect::PipelinePaths paths{out_dir};

    if (gen->parsed()) {
      affect::run_gen_data(config, paths);
      std::cout << "dataset written to " << paths.data().string() << "\n";
    } else if (train->parsed()) {
      affect::run_train(affect::parse_stage(train_stage), config, paths, std::cout);
      std::cout << "checkpoint written to "
                << paths.checkpoint_file(
                       affect::stage_artifact_name(affect::parse_stage(train_stage), config))
                       .string()
                << "\n";
    } else if (extract->parsed()) {
      affect::run_extract(affect::parse_stage(extract_stage), config, paths);
      std::cout << "features written to " << paths.features().string() << "\n";
    } else if (evaluate->parsed()) {
      std::cout << affect::run_evaluate(affect::parse_stage(eval_stage), eval_split, config, paths)
                << "\n";
    } else if (grad->parsed()) {
      if (!affect::run_grad_check(std::cout)) return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
