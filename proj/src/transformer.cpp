#include "affect/transformer.hpp"

#include <cmath>
#include <limits>

#include "affect/errors.hpp"

namespace affect {

using detail::Node;

AttentionMask::AttentionMask(std::vector<bool> valid) : valid_(std::move(valid)) {
  bool any = false;
  for (bool v : valid_) any = any || v;
  if (!any) throw ContractError("AttentionMask: at least one position must be valid");
}

AttentionMask AttentionMask::all_valid(std::size_t length) {
  return AttentionMask(std::vector<bool>(length, true));
}

Tensor softmax_rows_masked(const Tensor& x, const AttentionMask& mask) {
  auto xn = x.node();
  if (x.rank() != 2)
    throw DimensionError("softmax_rows_masked: expected 2-D logits, got " + shape_str(x.shape()));
  const std::size_t rows = x.extent(0), cols = x.extent(1);
  if (mask.length() != cols)
    throw DimensionError("softmax_rows_masked: mask length " + std::to_string(mask.length()) +
                         " vs " + std::to_string(cols) + " columns");
  for (double v : xn->value)
    if (!std::isfinite(v)) throw NumericError("softmax_rows_masked: non-finite logits");

  const std::vector<bool> valid = mask.flags();
  std::vector<double> out(rows * cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xn->value.data() + r * cols;
    double* o = out.data() + r * cols;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cols; ++j)
      if (valid[j]) mx = std::max(mx, in[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      if (!valid[j]) continue;
      o[j] = std::exp(in[j] - mx);
      s += o[j];
    }
    for (std::size_t j = 0; j < cols; ++j)
      if (valid[j]) o[j] /= s;
  }

  auto node = std::make_shared<Node>();
  node->shape = x.shape();
  node->value = std::move(out);
  node->requires_grad = xn->requires_grad;
  if (node->requires_grad) {
    node->parents = {xn};
    node->backprop = [xn, rows, cols](Node& self) {
      if (self.grad.empty()) return;
      auto& gx = xn->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        const double* y = self.value.data() + r * cols;
        const double* g = self.grad.data() + r * cols;
        double dot = 0.0;
        for (std::size_t j = 0; j < cols; ++j) dot += g[j] * y[j];
        for (std::size_t j = 0; j < cols; ++j) gx[r * cols + j] += y[j] * (g[j] - dot);
      }
    };
  }
  node->id = detail::next_node_id();
  return Tensor(node);
}

Tensor scaled_dot_attention(const Tensor& Q, const Tensor& K, const Tensor& V,
                            const AttentionMask& mask) {
  if (Q.rank() != 2 || K.rank() != 2 || V.rank() != 2)
    throw DimensionError("scaled_dot_attention: Q, K, V must be 2-D");
  const std::size_t T = Q.extent(0), dk = Q.extent(1);
  if (K.extent(0) != T || K.extent(1) != dk || V.extent(0) != T)
    throw DimensionError("scaled_dot_attention: inconsistent shapes " + shape_str(Q.shape()) + ", " +
                         shape_str(K.shape()) + ", " + shape_str(V.shape()));
  if (mask.length() != T)
    throw DimensionError("scaled_dot_attention: mask length " + std::to_string(mask.length()) +
                         " vs sequence length " + std::to_string(T));
  Tensor logits = scale(matmul(Q, transpose(K)), 1.0 / std::sqrt(static_cast<double>(dk)));
  Tensor weights = softmax_rows_masked(logits, mask);
  return matmul(weights, V);
}

std::vector<Tensor> MultiHeadParams::parameters() const {
  std::vector<Tensor> out;
  for (const auto& w : Wq) out.push_back(w);
  for (const auto& w : Wk) out.push_back(w);
  for (const auto& w : Wv) out.push_back(w);
  out.push_back(Wo);
  return out;
}

Tensor multi_head_attention(const Tensor& X, const MultiHeadParams& p, const AttentionMask& mask) {
  if (X.rank() != 2) throw DimensionError("multi_head_attention: expected [T x d_model]");
  if (p.Wq.empty() || p.Wq.size() != p.Wk.size() || p.Wq.size() != p.Wv.size())
    throw DimensionError("multi_head_attention: inconsistent head parameter counts");
  std::vector<Tensor> heads;
  heads.reserve(p.Wq.size());
  for (std::size_t h = 0; h < p.Wq.size(); ++h) {
    Tensor q = matmul(X, p.Wq[h]);
    Tensor k = matmul(X, p.Wk[h]);
    Tensor v = matmul(X, p.Wv[h]);
    heads.push_back(scaled_dot_attention(q, k, v, mask));
  }
  return matmul(concat(heads, 1), p.Wo);
}

std::vector<Tensor> EncoderBlockParams::parameters() const {
  std::vector<Tensor> out = mha.parameters();
  out.push_back(ln1_gamma);
  out.push_back(ln1_beta);
  out.push_back(ff1.W);
  out.push_back(ff1.b);
  out.push_back(ff2.W);
  out.push_back(ff2.b);
  out.push_back(ln2_gamma);
  out.push_back(ln2_beta);
  return out;
}

std::vector<Tensor> ContextEncoderParams::parameters() const {
  std::vector<Tensor> out;
  for (const auto& b : blocks) {
    auto bp = b.parameters();
    out.insert(out.end(), bp.begin(), bp.end());
  }
  out.push_back(head.W);
  out.push_back(head.b);
  return out;
}

ContextEncoderParams make_context_encoder(const EncoderConfig& config, Rng& rng) {
  if (config.d_model == 0) throw DimensionError("make_context_encoder: d_model must be positive");
  ContextEncoderParams p;
  p.config = config;
  for (std::size_t b = 0; b < config.blocks; ++b) {
    EncoderBlockParams blk;
    for (std::size_t h = 0; h < config.heads; ++h) {
      blk.mha.Wq.push_back(glorot_uniform({config.d_model, config.d_k}, config.d_model, config.d_k, rng));
      blk.mha.Wk.push_back(glorot_uniform({config.d_model, config.d_k}, config.d_model, config.d_k, rng));
      blk.mha.Wv.push_back(glorot_uniform({config.d_model, config.d_v}, config.d_model, config.d_v, rng));
    }
    const std::size_t concat_dim = config.heads * config.d_v;
    blk.mha.Wo = glorot_uniform({concat_dim, config.d_model}, concat_dim, config.d_model, rng);
    blk.ln1_gamma = Tensor::full({config.d_model}, 1.0);
    blk.ln1_gamma.set_requires_grad(true);
    blk.ln1_beta = Tensor::zeros({config.d_model});
    blk.ln1_beta.set_requires_grad(true);
    blk.ff1 = make_dense(config.d_model, config.ff_dim(), rng);
    blk.ff2 = make_dense(config.ff_dim(), config.d_model, rng);
    blk.ln2_gamma = Tensor::full({config.d_model}, 1.0);
    blk.ln2_gamma.set_requires_grad(true);
    blk.ln2_beta = Tensor::zeros({config.d_model});
    blk.ln2_beta.set_requires_grad(true);
    p.blocks.push_back(std::move(blk));
  }
  p.head = make_dense(config.d_model, 2, rng);
  return p;
}

Tensor transformer_encode(const Tensor& X, const ContextEncoderParams& p, const AttentionMask& mask) {
  if (X.rank() != 2 || X.extent(1) != p.config.d_model)
    throw DimensionError("transformer_encode: input " + shape_str(X.shape()) +
                         " does not match d_model " + std::to_string(p.config.d_model));
  if (mask.length() != X.extent(0))
    throw DimensionError("transformer_encode: mask length " + std::to_string(mask.length()) +
                         " vs sequence length " + std::to_string(X.extent(0)));
  Tensor h = X;
  for (const auto& blk : p.blocks) {
    Tensor attended = multi_head_attention(h, blk.mha, mask);
    h = layer_norm(add(h, attended), blk.ln1_gamma, blk.ln1_beta, p.config.eps);
    Tensor ff = dense(relu(dense(h, blk.ff1)), blk.ff2);
    h = layer_norm(add(h, ff), blk.ln2_gamma, blk.ln2_beta, p.config.eps);
  }
  return h;
}

Tensor context_predict(const Tensor& X, const ContextEncoderParams& p, const AttentionMask& mask) {
  return dense(transformer_encode(X, p, mask), p.head);
}

}  // namespace affect
