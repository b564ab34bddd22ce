#include "affect/visual_encoder.hpp"

#include <cmath>

#include "affect/errors.hpp"

namespace affect {

Clip make_clip(Tensor frames) {
  const Shape want{kClipChannels, kClipFrames, kClipSide, kClipSide};
  if (frames.shape() != want)
    throw DimensionError("make_clip: expected " + shape_str(want) + ", got " + shape_str(frames.shape()));
  for (double v : frames.values())
    if (!std::isfinite(v)) throw NumericError("make_clip: non-finite pixel value");
  return Clip{std::move(frames)};
}

Clip sample_frames(const Tensor& video, std::size_t n) {
  if (video.rank() != 4 || video.extent(0) != kClipChannels || video.extent(2) != kClipSide ||
      video.extent(3) != kClipSide)
    throw InputError("sample_frames: expected [3 x F x 32 x 32], got " + shape_str(video.shape()));
  const std::size_t F = video.extent(1);
  const std::size_t plane = kClipSide * kClipSide;
  std::vector<double> out(kClipChannels * n * plane);
  const auto src = video.values();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t fi = i * F / n;  // floor(i*F/n)
    for (std::size_t c = 0; c < kClipChannels; ++c)
      std::copy_n(src.data() + (c * F + fi) * plane, plane, out.data() + (c * n + i) * plane);
  }
  return make_clip(Tensor::from({kClipChannels, n, kClipSide, kClipSide}, std::move(out)));
}

std::vector<Tensor> VisualEncoderParams::parameters() const {
  return {conv1.kernels, conv1.bias, conv2.kernels, conv2.bias, fc1.W, fc1.b, fc2.W, fc2.b};
}

VisualEncoderParams make_visual_encoder(std::size_t channels, std::size_t kernel,
                                        std::size_t feature_dim, Rng& rng, std::size_t in_channels,
                                        std::size_t spatial) {
  const auto ceil_div = [](std::size_t a, std::size_t b) { return (a + b - 1) / b; };
  const std::size_t side = ceil_div(ceil_div(spatial, std::size_t{4}), std::size_t{3});
  const std::size_t flatten = channels * side * side * side;
  VisualEncoderParams p;
  p.conv1 = make_conv3d(channels, in_channels, kernel, rng);
  p.conv2 = make_conv3d(channels, channels, kernel, rng);
  p.fc1 = make_dense(flatten, feature_dim, rng);
  p.fc2 = make_dense(feature_dim, 2, rng);
  return p;
}

VisualForward visual_net_forward(const Tensor& x, const VisualEncoderParams& p) {
  Tensor h = max_pool3d(relu(add_channelwise(conv3d_same(x, p.conv1.kernels), p.conv1.bias)), 4);
  h = max_pool3d(relu(add_channelwise(conv3d_same(h, p.conv2.kernels), p.conv2.bias)), 3);
  h = reshape(h, {h.numel()});
  if (h.numel() != p.fc1.in())
    throw DimensionError("visual_net_forward: flattened volume " + std::to_string(h.numel()) +
                         " does not match fc1 input " + std::to_string(p.fc1.in()));
  VisualForward out;
  out.features = relu(dense(h, p.fc1));
  out.prediction = dense(out.features, p.fc2);
  return out;
}

VisualForward visual_forward(const Clip& clip, const VisualEncoderParams& p) {
  return visual_net_forward(clip.frames, p);
}

}  // namespace affect
