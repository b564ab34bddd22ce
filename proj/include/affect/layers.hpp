#pragma once

#include "affect/rng.hpp"
#include "affect/tensor.hpp"

namespace affect {

/// Fully connected layer parameters: W [in x out], b [out].
struct DenseParams {
  Tensor W;
  Tensor b;

  std::size_t in() const { return W.extent(0); }
  std::size_t out() const { return W.extent(1); }
};

/// 3-D convolution parameters: kernels [co x ci x k x k x k], bias [co].
struct Conv3dParams {
  Tensor kernels;
  Tensor bias;
};

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);
DenseParams make_dense(std::size_t in, std::size_t out, Rng& rng);
Conv3dParams make_conv3d(std::size_t co, std::size_t ci, std::size_t k, Rng& rng);

/// x W + b over the trailing axis; x is [in] or [rows x in].
Tensor dense(const Tensor& x, const DenseParams& p);

/// Row-wise softmax over the last axis, max-subtracted for stability.
Tensor softmax_rows(const Tensor& x);

/// Per-row normalization over the last axis (population variance),
/// then gamma / beta affine.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

/// Valid convolution of x [L x k] with a kernel bank [f x w x k] -> [(L-w+1) x f].
/// Every kernel spans the full input width k.
Tensor conv1d_valid(const Tensor& x, const Tensor& kernels);

/// Zero-padded convolution preserving spatial shape:
/// x [ci x D x H x W], kernels [co x ci x kd x kh x kw] (odd extents) -> [co x D x H x W].
Tensor conv3d_same(const Tensor& x, const Tensor& kernels);

/// Adds bias[c] to every element of channel c; x is [c x ...].
Tensor add_channelwise(const Tensor& x, const Tensor& bias);

/// Non-overlapping max pooling with ceil-mode output extents
/// (partial windows at the far edges). Gradient goes to the first maximum.
Tensor max_pool3d(const Tensor& x, std::size_t window);

/// Column-wise max of [L x f] -> [f]; gradient to the first maximum.
Tensor max_over_time(const Tensor& x);

}  // namespace affect
