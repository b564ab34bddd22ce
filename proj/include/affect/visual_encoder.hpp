#pragma once

#include "affect/layers.hpp"
#include "affect/tensor.hpp"

namespace affect {

constexpr std::size_t kClipFrames = 32;
constexpr std::size_t kClipSide = 32;
constexpr std::size_t kClipChannels = 3;

/// One sampled video clip: [3 x 32 x 32 x 32] (channels x time x height x
/// width), finite values in [0, 1].
struct Clip {
  Tensor frames;
};

Clip make_clip(Tensor frames);

/// Equally inter-spaced frame selection: output index i takes input frame
/// floor(i * F / n); frames repeat when F < n. video is [3 x F x H x W].
Clip sample_frames(const Tensor& video, std::size_t n = kClipFrames);

/// Two conv/pool stages (same padding, ceil-mode pooling with windows 4
/// then 3) followed by two dense layers; the penultimate activations are
/// the clip features.
struct VisualEncoderParams {
  Conv3dParams conv1;
  Conv3dParams conv2;
  DenseParams fc1;
  DenseParams fc2;

  std::vector<Tensor> parameters() const;
};

/// channels filters of size k^3 per conv layer; fc1 input is sized for a
/// cubic input of extent `spatial` per axis (32 -> pool4 -> 8 -> pool3 ->
/// 3, so channels * 27 for the standard clip).
VisualEncoderParams make_visual_encoder(std::size_t channels, std::size_t kernel,
                                        std::size_t feature_dim, Rng& rng,
                                        std::size_t in_channels = kClipChannels,
                                        std::size_t spatial = kClipSide);

struct VisualForward {
  Tensor features;
  Tensor prediction;
};

/// Network body on an arbitrary [ci x D x H x W] tensor; fc1 must match
/// the flattened pooled volume.
VisualForward visual_net_forward(const Tensor& x, const VisualEncoderParams& p);

VisualForward visual_forward(const Clip& clip, const VisualEncoderParams& p);

}  // namespace affect
