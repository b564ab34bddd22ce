#pragma once

#include <vector>

#include "affect/layers.hpp"
#include "affect/tensor.hpp"

namespace affect {

struct EncoderConfig {
  std::size_t d_model = 0;
  std::size_t d_k = 64;
  std::size_t d_v = 64;
  std::size_t heads = 8;
  std::size_t blocks = 2;
  std::size_t d_ff = 0;  // 0 -> 4 * d_model
  double eps = 1e-5;

  std::size_t ff_dim() const { return d_ff ? d_ff : 4 * d_model; }
};

/// Per-position validity for one padded sequence; at least one position
/// must be valid.
class AttentionMask {
 public:
  explicit AttentionMask(std::vector<bool> valid);
  static AttentionMask all_valid(std::size_t length);

  std::size_t length() const { return valid_.size(); }
  bool valid(std::size_t i) const { return valid_[i]; }
  const std::vector<bool>& flags() const { return valid_; }

 private:
  std::vector<bool> valid_;
};

/// Row-wise softmax over valid columns only; masked columns get weight
/// exactly zero (no infinities enter the arithmetic).
Tensor softmax_rows_masked(const Tensor& x, const AttentionMask& mask);

/// softmax(Q K^T / sqrt(d_k)) V with masked keys excluded.
Tensor scaled_dot_attention(const Tensor& Q, const Tensor& K, const Tensor& V,
                            const AttentionMask& mask);

/// Per-head projection weights (no biases) plus the output projection
/// that restores d_model after concatenating the heads.
struct MultiHeadParams {
  std::vector<Tensor> Wq, Wk, Wv;  // heads x [d_model x d_k / d_v]
  Tensor Wo;                       // [heads*d_v x d_model]

  std::vector<Tensor> parameters() const;
};

Tensor multi_head_attention(const Tensor& X, const MultiHeadParams& p, const AttentionMask& mask);

struct EncoderBlockParams {
  MultiHeadParams mha;
  Tensor ln1_gamma, ln1_beta;
  DenseParams ff1, ff2;
  Tensor ln2_gamma, ln2_beta;

  std::vector<Tensor> parameters() const;
};

struct ContextEncoderParams {
  EncoderConfig config;
  std::vector<EncoderBlockParams> blocks;
  DenseParams head;  // [d_model -> 2]

  std::vector<Tensor> parameters() const;
};

ContextEncoderParams make_context_encoder(const EncoderConfig& config, Rng& rng);

/// N blocks of LayerNorm(x + MHA(x)) then LayerNorm(x + FFN(x)).
Tensor transformer_encode(const Tensor& X, const ContextEncoderParams& p, const AttentionMask& mask);

/// Encoded sequence through the dense output head -> [T x 2].
Tensor context_predict(const Tensor& X, const ContextEncoderParams& p, const AttentionMask& mask);

}  // namespace affect
