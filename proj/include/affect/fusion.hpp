#pragma once

#include <cstdint>
#include <vector>

#include "affect/tensor.hpp"

namespace affect {

/// Frozen random projection maps for one modality: hash [D] -> [0, d),
/// sign [D] -> {-1, +1}. Drawn once per model from the stored seed and
/// serialized explicitly, never resampled during training.
struct SketchParams {
  std::vector<std::uint32_t> hash;
  std::vector<std::int8_t> sign;
  std::uint64_t seed = 0;
  std::size_t sketch_dim = 0;

  std::size_t input_dim() const { return hash.size(); }
};

SketchParams make_sketch(std::size_t input_dim, std::size_t sketch_dim, std::uint64_t seed);

/// out[t] = sum over j with hash(j) == t of sign(j) * x[j]. Linear;
/// the gradient is the transposed gather.
Tensor count_sketch(const Tensor& x, const SketchParams& p);

/// Cyclic convolution of two equal-length vectors as a differentiable op.
/// Power-of-two lengths go through the FFT, others through the direct sum;
/// both gradients use the adjoint correlation of the direct expression.
Tensor circular_convolution(const Tensor& a, const Tensor& b);

/// x_l (+) x_v (+) x_a in fixed modality order.
Tensor concat_fusion(const Tensor& x_l, const Tensor& x_v, const Tensor& x_a);

/// Compact bilinear pooling of three modalities: the circular convolution
/// of their count sketches, approximating the sketched flattened triple
/// outer product.
Tensor mcb3(const Tensor& x_l, const Tensor& x_v, const Tensor& x_a, const SketchParams& p_l,
            const SketchParams& p_v, const SketchParams& p_a);

}  // namespace affect
