#pragma once

#include <span>
#include <vector>

#include "affect/layers.hpp"
#include "affect/tensor.hpp"

namespace affect {

/// Regression F statistic per column of X [n x D] against target y:
/// r^2 / (1 - r^2) * (n - 2) from the Pearson correlation r, with r^2
/// clamped below 1 - 1e-12. Constant columns (or constant y) score 0.
std::vector<double> univariate_scores(const Tensor& X, std::span<const double> y);

/// Top-k column indices per target (ties to the lower index), merged as a
/// sorted set union.
std::vector<std::size_t> kbest_merge(const Tensor& X, std::span<const double> y_arousal,
                                     std::span<const double> y_valence, std::size_t k);

struct StandardizeStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // constant columns clamp to 1
};

StandardizeStats column_stats(const Tensor& X);
/// (x - mean) / stddev per column with the given (training) statistics.
Tensor standardize_apply(const Tensor& X, const StandardizeStats& stats);

Tensor select_columns(const Tensor& X, std::span<const std::size_t> indices);

/// Small regression head over the selected feature vector; the feature
/// output of this stage is the input vector itself, passed through.
struct AudioEncoderParams {
  DenseParams fc1;
  DenseParams fc2;

  std::vector<Tensor> parameters() const { return {fc1.W, fc1.b, fc2.W, fc2.b}; }
};

AudioEncoderParams make_audio_encoder(std::size_t in, std::size_t hidden, Rng& rng);

struct AudioForward {
  Tensor features;
  Tensor prediction;
};

AudioForward audio_forward(const Tensor& x, const AudioEncoderParams& p);

}  // namespace affect
