#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "affect/config.hpp"

namespace affect {

enum class Stage { Text, Visual, Audio, ContextText, ContextVisual, ContextAudio, Fusion };

Stage parse_stage(const std::string& name);
std::string stage_cli_name(Stage stage);
/// Checkpoint/report stem; fusion carries its variant ("fusion-mcb").
std::string stage_artifact_name(Stage stage, const PipelineConfig& config);

/// Workspace layout rooted at --out.
struct PipelinePaths {
  std::filesystem::path out;

  std::filesystem::path data() const { return out / "data"; }
  std::filesystem::path checkpoints() const { return out / "checkpoints"; }
  std::filesystem::path features() const { return out / "features"; }
  std::filesystem::path reports() const { return out / "reports"; }
  std::filesystem::path checkpoint_file(const std::string& artifact) const {
    return checkpoints() / (artifact + ".ckpt");
  }
};

void run_gen_data(const PipelineConfig& config, const PipelinePaths& paths);

/// Trains one stage end to end (best-validation checkpoint selection) and
/// writes its checkpoint. Context stages require extracted features.
void run_train(Stage stage, const PipelineConfig& config, const PipelinePaths& paths, std::ostream& log);

/// Writes features/<modality>_<split>.omgt (+ id sidecar) for both splits
/// from a trained stage-1 checkpoint.
void run_extract(Stage stage, const PipelineConfig& config, const PipelinePaths& paths);

/// Writes and returns the metric report line for one model on one split.
std::string run_evaluate(Stage stage, const std::string& split, const PipelineConfig& config,
                         const PipelinePaths& paths);

/// Gradient suite over every layer and full-stage loss at scaled-down
/// sizes; prints one line per check. Returns true when all pass.
bool run_grad_check(std::ostream& out);

struct OverfitResult {
  double loss = 0.0;     // total loss summed over both targets
  std::size_t steps = 0;
};

/// Trains the stage on the first training video only until the summed
/// total loss drops below stop_loss (or max_steps is hit).
OverfitResult overfit_single_video(Stage stage, const PipelineConfig& config, const PipelinePaths& paths,
                                   std::size_t max_steps, double stop_loss, std::ostream& log);

}  // namespace affect
