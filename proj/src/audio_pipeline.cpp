#include "affect/audio_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "affect/errors.hpp"

namespace affect {

namespace {

void check_matrix(const Tensor& X, const char* op) {
  if (X.rank() != 2)
    throw InputError(std::string(op) + ": expected [n x D] matrix, got " + shape_str(X.shape()));
  for (double v : X.values())
    if (!std::isfinite(v)) throw InputError(std::string(op) + ": non-finite feature value");
}

}  // namespace

std::vector<double> univariate_scores(const Tensor& X, std::span<const double> y) {
  check_matrix(X, "univariate_scores");
  const std::size_t n = X.extent(0), D = X.extent(1);
  if (y.size() != n)
    throw InputError("univariate_scores: " + std::to_string(y.size()) + " targets for " +
                     std::to_string(n) + " rows");
  if (n < 3) throw InputError("univariate_scores: needs at least 3 samples, got " + std::to_string(n));

  double my = 0.0;
  for (double v : y) my += v;
  my /= static_cast<double>(n);
  double vy = 0.0;
  for (double v : y) vy += (v - my) * (v - my);

  std::vector<double> scores(D, 0.0);
  if (vy == 0.0) return scores;  // constant target

  const auto xv = X.values();
  for (std::size_t j = 0; j < D; ++j) {
    double mx = 0.0;
    for (std::size_t i = 0; i < n; ++i) mx += xv[i * D + j];
    mx /= static_cast<double>(n);
    double vx = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = xv[i * D + j] - mx;
      vx += dx * dx;
      cov += dx * (y[i] - my);
    }
    if (vx == 0.0) continue;
    double r2 = (cov * cov) / (vx * vy);
    r2 = std::min(r2, 1.0 - 1e-12);
    scores[j] = r2 / (1.0 - r2) * static_cast<double>(n - 2);
  }
  return scores;
}

namespace {

std::vector<std::size_t> top_k(const std::vector<double>& scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  idx.resize(k);
  return idx;
}

}  // namespace

std::vector<std::size_t> kbest_merge(const Tensor& X, std::span<const double> y_arousal,
                                     std::span<const double> y_valence, std::size_t k) {
  check_matrix(X, "kbest_merge");
  if (k == 0) throw InputError("kbest_merge: k must be positive");
  if (X.extent(1) < k)
    throw InputError("kbest_merge: k = " + std::to_string(k) + " exceeds feature count " +
                     std::to_string(X.extent(1)));
  auto ta = top_k(univariate_scores(X, y_arousal), k);
  auto tv = top_k(univariate_scores(X, y_valence), k);
  std::vector<std::size_t> merged(ta);
  merged.insert(merged.end(), tv.begin(), tv.end());
  std::sort(merged.begin(), merged.end());
  merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
  return merged;
}

StandardizeStats column_stats(const Tensor& X) {
  check_matrix(X, "column_stats");
  const std::size_t n = X.extent(0), D = X.extent(1);
  StandardizeStats s;
  s.mean.assign(D, 0.0);
  s.stddev.assign(D, 1.0);
  const auto xv = X.values();
  for (std::size_t j = 0; j < D; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += xv[i * D + j];
    m /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = xv[i * D + j] - m;
      var += d * d;
    }
    var /= static_cast<double>(n);
    s.mean[j] = m;
    s.stddev[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

Tensor standardize_apply(const Tensor& X, const StandardizeStats& stats) {
  check_matrix(X, "standardize_apply");
  const std::size_t n = X.extent(0), D = X.extent(1);
  if (stats.mean.size() != D || stats.stddev.size() != D)
    throw DimensionError("standardize_apply: stats of width " + std::to_string(stats.mean.size()) +
                         " for matrix " + shape_str(X.shape()));
  std::vector<double> out(n * D);
  const auto xv = X.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < D; ++j)
      out[i * D + j] = (xv[i * D + j] - stats.mean[j]) / stats.stddev[j];
  return Tensor::from({n, D}, std::move(out));
}

Tensor select_columns(const Tensor& X, std::span<const std::size_t> indices) {
  check_matrix(X, "select_columns");
  const std::size_t n = X.extent(0), D = X.extent(1);
  for (std::size_t j : indices)
    if (j >= D)
      throw DimensionError("select_columns: index " + std::to_string(j) + " out of range for " +
                           shape_str(X.shape()));
  std::vector<double> out(n * indices.size());
  const auto xv = X.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < indices.size(); ++c) out[i * indices.size() + c] = xv[i * D + indices[c]];
  return Tensor::from({n, indices.size()}, std::move(out));
}

AudioEncoderParams make_audio_encoder(std::size_t in, std::size_t hidden, Rng& rng) {
  AudioEncoderParams p;
  p.fc1 = make_dense(in, hidden, rng);
  p.fc2 = make_dense(hidden, 2, rng);
  return p;
}

AudioForward audio_forward(const Tensor& x, const AudioEncoderParams& p) {
  if (x.rank() != 1 || x.numel() != p.fc1.in())
    throw DimensionError("audio_forward: input " + shape_str(x.shape()) + " does not match head input " +
                         std::to_string(p.fc1.in()));
  AudioForward out;
  out.features = x;  // pass-through: the selected vector is the feature
  out.prediction = dense(relu(dense(x, p.fc1)), p.fc2);
  return out;
}

}  // namespace affect
