#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace affect {

enum class FusionVariant { Concat, Mcb };
enum class OptimizerKind { Adam, Sgd };
enum class CccScope { Video, Pooled };

/// Every knob of the pipeline as a flat key = value file; unknown keys
/// are rejected at parse time.
struct PipelineConfig {
  std::uint64_t seed = 1;

  // synthetic dataset
  std::size_t videos_train = 200;
  std::size_t videos_validation = 50;
  std::size_t utterances_min = 3;
  std::size_t utterances_max = 8;
  double context_alpha = 0.5;
  std::size_t vocab_levels = 64;
  std::size_t filler_vocab = 32;
  std::size_t transcript_fillers = 6;
  std::size_t embedding_dim = 50;
  std::size_t audio_dim = 48;
  std::size_t audio_informative = 4;
  std::size_t clip_frames_min = 6;
  std::size_t clip_frames_max = 12;
  double noise_text = 0.08;
  double noise_visual = 0.08;
  double noise_audio = 0.08;
  double arousal_min = 0.0;
  double arousal_max = 1.0;
  double valence_min = -1.0;
  double valence_max = 1.0;

  // models
  std::vector<std::size_t> text_kernel_widths = {3, 4, 2};
  std::vector<std::size_t> text_feature_maps = {30, 30, 60};
  std::size_t visual_channels = 8;
  std::size_t visual_kernel = 5;
  std::size_t visual_feature_dim = 128;
  std::size_t audio_k_best = 12;
  std::size_t audio_hidden = 64;
  std::size_t enc_heads = 8;
  std::size_t enc_d_k = 64;
  std::size_t enc_d_v = 64;
  std::size_t enc_blocks = 2;
  std::size_t enc_ff_mult = 4;
  double enc_eps = 1e-5;
  FusionVariant fusion_variant = FusionVariant::Concat;
  std::size_t mcb_dim = 512;

  // training
  OptimizerKind optimizer = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_videos = 8;
  std::size_t epochs_text = 30;
  std::size_t epochs_visual = 3;
  std::size_t epochs_audio = 40;
  std::size_t epochs_context = 40;
  std::size_t epochs_fusion = 40;
  double ccc_weight = 0.25;
  CccScope ccc_scope = CccScope::Video;
  CccScope eval_pool = CccScope::Pooled;

  static PipelineConfig from_file(const std::filesystem::path& path);
  static PipelineConfig from_text(const std::string& text);

  /// Canonical key = value rendering; parses back to an equal config.
  std::string serialize() const;

  void validate() const;
};

std::string to_string(FusionVariant v);

}  // namespace affect
