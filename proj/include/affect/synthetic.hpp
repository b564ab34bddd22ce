#pragma once

#include <filesystem>

#include "affect/config.hpp"

namespace affect {

/// Writes a complete synthetic dataset (train + validation splits and the
/// shared embedding table) under data_dir. Labels mix each utterance's
/// latent base with its neighbors' bases by context_alpha, while every
/// modality observes only the utterance's own base through independent
/// noise. Byte-identical output for identical (config, seed).
void generate_synthetic(const PipelineConfig& config, const std::filesystem::path& data_dir);

/// label[t] = clip((1-alpha) * base[t] + alpha * mean(existing neighbors)).
std::vector<double> context_labels(const std::vector<double>& bases, double alpha, double lo, double hi);

}  // namespace affect
