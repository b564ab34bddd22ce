#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "affect/layers.hpp"
#include "affect/tensor.hpp"

namespace affect {

/// Frozen word vectors ingested from file; unknown tokens embed to zero.
struct EmbeddingTable {
  std::unordered_map<std::string, std::size_t> vocab;
  Tensor vectors;  // [V x k]

  std::size_t dim() const { return vectors.extent(1); }
};

/// Text format: optional first line "V k", then one line per token:
/// `token v1 ... vk`.
EmbeddingTable load_embeddings(const std::filesystem::path& path);

/// First `window` tokens embedded row-wise; shorter sentences are
/// zero-padded at the end, longer ones truncated.
Tensor embed_sentence(const std::vector<std::string>& tokens, const EmbeddingTable& table,
                      std::size_t window = 50);

/// Sentence CNN: parallel kernel banks over the embedding window, ReLU,
/// max-over-time per bank, concat, ReLU, then a dense head to
/// (arousal, valence).
struct TextEncoderParams {
  struct Bank {
    Tensor kernels;  // [f x w x k]
    Tensor bias;     // [f]
  };
  std::vector<Bank> banks;
  DenseParams fc_out;

  std::size_t feature_size() const;
  std::size_t embed_dim() const { return banks.empty() ? 0 : banks[0].kernels.extent(2); }
  std::vector<Tensor> parameters() const;
};

/// Default bank layout: widths 3, 4, 2 with 30, 30, 60 feature maps (120
/// features total).
TextEncoderParams make_text_encoder(std::size_t embed_dim, Rng& rng,
                                    const std::vector<std::size_t>& widths = {3, 4, 2},
                                    const std::vector<std::size_t>& maps = {30, 30, 60});

struct TextForward {
  Tensor features;    // pre-head activations
  Tensor prediction;  // [2]
};

TextForward text_forward(const Tensor& window, const TextEncoderParams& p);

}  // namespace affect
