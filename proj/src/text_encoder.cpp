#include "affect/text_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "affect/errors.hpp"

namespace affect {

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("load_embeddings: cannot open " + path.string());

  EmbeddingTable table;
  std::vector<double> flat;
  std::size_t dim = 0;
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (first) {
      first = false;
      // optional "V k" header: two integers and nothing else
      std::size_t v = 0, k = 0;
      std::string extra;
      std::istringstream probe(line);
      if (probe >> v >> k && !(probe >> extra)) continue;
    }
    std::string token;
    ls >> token;
    std::vector<double> row;
    double x;
    while (ls >> x) row.push_back(x);
    if (row.empty())
      throw FormatError("load_embeddings: no values for token '" + token + "' at line " +
                        std::to_string(lineno));
    if (dim == 0) dim = row.size();
    if (row.size() != dim)
      throw FormatError("load_embeddings: token '" + token + "' has " + std::to_string(row.size()) +
                        " values, expected " + std::to_string(dim));
    if (table.vocab.contains(token))
      throw FormatError("load_embeddings: duplicate token '" + token + "'");
    for (double v : row)
      if (!std::isfinite(v)) throw FormatError("load_embeddings: non-finite value for '" + token + "'");
    table.vocab.emplace(token, table.vocab.size());
    flat.insert(flat.end(), row.begin(), row.end());
  }
  if (table.vocab.empty()) throw FormatError("load_embeddings: empty table in " + path.string());
  table.vectors = Tensor::from({table.vocab.size(), dim}, std::move(flat));
  return table;
}

Tensor embed_sentence(const std::vector<std::string>& tokens, const EmbeddingTable& table,
                      std::size_t window) {
  const std::size_t k = table.dim();
  std::vector<double> out(window * k, 0.0);
  const auto& vec = table.vectors.values();
  const std::size_t n = std::min(window, tokens.size());
  for (std::size_t i = 0; i < n; ++i) {
    auto it = table.vocab.find(tokens[i]);
    if (it == table.vocab.end()) continue;  // unknown -> zero row
    std::copy_n(vec.data() + it->second * k, k, out.data() + i * k);
  }
  return Tensor::from({window, k}, std::move(out));
}

std::size_t TextEncoderParams::feature_size() const {
  std::size_t total = 0;
  for (const auto& bank : banks) total += bank.kernels.extent(0);
  return total;
}

std::vector<Tensor> TextEncoderParams::parameters() const {
  std::vector<Tensor> out;
  for (const auto& bank : banks) {
    out.push_back(bank.kernels);
    out.push_back(bank.bias);
  }
  out.push_back(fc_out.W);
  out.push_back(fc_out.b);
  return out;
}

TextEncoderParams make_text_encoder(std::size_t embed_dim, Rng& rng,
                                    const std::vector<std::size_t>& widths,
                                    const std::vector<std::size_t>& maps) {
  if (widths.empty() || widths.size() != maps.size())
    throw DimensionError("make_text_encoder: kernel widths and map counts must align");
  TextEncoderParams p;
  std::size_t features = 0;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    TextEncoderParams::Bank bank;
    bank.kernels = glorot_uniform({maps[i], widths[i], embed_dim}, widths[i] * embed_dim, maps[i], rng);
    bank.bias = Tensor::zeros({maps[i]});
    bank.bias.set_requires_grad(true);
    p.banks.push_back(std::move(bank));
    features += maps[i];
  }
  p.fc_out = make_dense(features, 2, rng);
  return p;
}

TextForward text_forward(const Tensor& window, const TextEncoderParams& p) {
  if (window.rank() != 2 || window.extent(1) != p.embed_dim())
    throw DimensionError("text_forward: window " + shape_str(window.shape()) +
                         " does not match embedding dim " + std::to_string(p.embed_dim()));
  std::vector<Tensor> pooled;
  pooled.reserve(p.banks.size());
  for (const auto& bank : p.banks) {
    Tensor conv = add_rowwise(conv1d_valid(window, bank.kernels), bank.bias);
    pooled.push_back(max_over_time(relu(conv)));
  }
  TextForward out;
  out.features = relu(concat(pooled, 0));
  out.prediction = dense(out.features, p.fc_out);
  return out;
}

}  // namespace affect
