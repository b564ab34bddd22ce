#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "affect/audio_pipeline.hpp"
#include "affect/fusion.hpp"
#include "affect/tensor.hpp"

namespace affect {

/// Everything needed to restore a trained stage: named parameter tensors
/// (f64, bit-exact round trip), sketch maps and audio selection state
/// where the stage has them, plus the config snapshot it was trained with.
struct Checkpoint {
  std::string stage;
  std::string config_snapshot;
  std::vector<std::pair<std::string, Tensor>> tensors;
  std::vector<SketchParams> sketches;
  std::vector<std::size_t> selected_indices;
  StandardizeStats audio_stats;

  const Tensor* find(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace affect
