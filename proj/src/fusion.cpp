#include "affect/fusion.hpp"

#include "affect/errors.hpp"
#include "affect/fft.hpp"
#include "affect/rng.hpp"

namespace affect {

using detail::Node;

SketchParams make_sketch(std::size_t input_dim, std::size_t sketch_dim, std::uint64_t seed) {
  if (input_dim == 0 || sketch_dim == 0)
    throw DimensionError("make_sketch: dimensions must be positive");
  SketchParams p;
  p.seed = seed;
  p.sketch_dim = sketch_dim;
  p.hash.resize(input_dim);
  p.sign.resize(input_dim);
  Rng rng(seed);
  for (std::size_t j = 0; j < input_dim; ++j) {
    p.hash[j] = static_cast<std::uint32_t>(rng.below(sketch_dim));
    p.sign[j] = rng.below(2) ? std::int8_t{1} : std::int8_t{-1};
  }
  return p;
}

Tensor count_sketch(const Tensor& x, const SketchParams& p) {
  if (x.rank() != 1 || x.numel() != p.input_dim())
    throw DimensionError("count_sketch: input " + shape_str(x.shape()) + " does not match maps of size " +
                         std::to_string(p.input_dim()));
  auto xn = x.node();
  std::vector<double> out(p.sketch_dim, 0.0);
  for (std::size_t j = 0; j < p.hash.size(); ++j)
    out[p.hash[j]] += static_cast<double>(p.sign[j]) * xn->value[j];

  auto n = std::make_shared<Node>();
  n->shape = {p.sketch_dim};
  n->value = std::move(out);
  n->requires_grad = xn->requires_grad;
  if (n->requires_grad) {
    n->parents = {xn};
    const std::vector<std::uint32_t> hash = p.hash;
    const std::vector<std::int8_t> sign = p.sign;
    n->backprop = [xn, hash, sign](Node& self) {
      if (self.grad.empty()) return;
      auto& gx = xn->grad_buffer();
      for (std::size_t j = 0; j < hash.size(); ++j)
        gx[j] += static_cast<double>(sign[j]) * self.grad[hash[j]];
    };
  }
  n->id = detail::next_node_id();
  return Tensor(n);
}

Tensor circular_convolution(const Tensor& a, const Tensor& b) {
  if (a.rank() != 1 || b.rank() != 1 || a.numel() != b.numel())
    throw DimensionError("circular_convolution: expected equal-length vectors, got " +
                         shape_str(a.shape()) + " and " + shape_str(b.shape()));
  auto an = a.node();
  auto bn = b.node();
  std::vector<double> out = circular_convolve(an->value, bn->value);

  auto n = std::make_shared<Node>();
  n->shape = a.shape();
  n->value = std::move(out);
  n->requires_grad = an->requires_grad || bn->requires_grad;
  if (n->requires_grad) {
    if (an->requires_grad) n->parents.push_back(an);
    if (bn->requires_grad) n->parents.push_back(bn);
    n->backprop = [an, bn](Node& self) {
      if (self.grad.empty()) return;
      if (an->requires_grad) {
        auto da = circular_correlate(self.grad, bn->value);
        auto& ga = an->grad_buffer();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += da[i];
      }
      if (bn->requires_grad) {
        auto db = circular_correlate(self.grad, an->value);
        auto& gb = bn->grad_buffer();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += db[i];
      }
    };
  }
  n->id = detail::next_node_id();
  return Tensor(n);
}

Tensor concat_fusion(const Tensor& x_l, const Tensor& x_v, const Tensor& x_a) {
  if (x_l.rank() != 1 || x_v.rank() != 1 || x_a.rank() != 1)
    throw DimensionError("concat_fusion: expected 1-D modality vectors, got " + shape_str(x_l.shape()) +
                         ", " + shape_str(x_v.shape()) + ", " + shape_str(x_a.shape()));
  return concat({x_l, x_v, x_a}, 0);
}

Tensor mcb3(const Tensor& x_l, const Tensor& x_v, const Tensor& x_a, const SketchParams& p_l,
            const SketchParams& p_v, const SketchParams& p_a) {
  if (p_l.sketch_dim != p_v.sketch_dim || p_v.sketch_dim != p_a.sketch_dim)
    throw DimensionError("mcb3: sketch dimensions differ: " + std::to_string(p_l.sketch_dim) + ", " +
                         std::to_string(p_v.sketch_dim) + ", " + std::to_string(p_a.sketch_dim));
  Tensor s_l = count_sketch(x_l, p_l);
  Tensor s_v = count_sketch(x_v, p_v);
  Tensor s_a = count_sketch(x_a, p_a);
  return circular_convolution(circular_convolution(s_l, s_v), s_a);
}

}  // namespace affect
