#include "affect/losses.hpp"

#include <algorithm>
#include <cstdio>

#include "affect/errors.hpp"

namespace affect {

namespace {

void check_series(const Tensor& x, const Tensor& y, std::size_t min_len, const char* op) {
  if (x.rank() != 1 || y.rank() != 1)
    throw InputError(std::string(op) + ": expected 1-D series, got " + shape_str(x.shape()) + " and " +
                     shape_str(y.shape()));
  if (x.numel() != y.numel())
    throw InputError(std::string(op) + ": length mismatch " + std::to_string(x.numel()) + " vs " +
                     std::to_string(y.numel()));
  if (x.numel() < min_len)
    throw InputError(std::string(op) + ": needs at least " + std::to_string(min_len) +
                     " samples, got " + std::to_string(x.numel()));
}

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
}

}  // namespace

Tensor mse(const Tensor& x, const Tensor& y) {
  check_series(x, y, 1, "mse");
  Tensor d = sub(x, y);
  return mean(mul(d, d));
}

Tensor ccc(const Tensor& x, const Tensor& y) {
  check_series(x, y, 2, "ccc");
  if (is_constant(x.values()) && is_constant(y.values()))
    return Tensor::scalar(x.values()[0] == y.values()[0] ? 1.0 : 0.0);

  Tensor mx = mean(x);
  Tensor my = mean(y);
  Tensor dx = sub(x, mx);
  Tensor dy = sub(y, my);
  Tensor var_x = mean(mul(dx, dx));
  Tensor var_y = mean(mul(dy, dy));
  Tensor cov = mean(mul(dx, dy));
  Tensor dm = sub(mx, my);
  Tensor den = add_const(add(add(var_x, var_y), mul(dm, dm)), 1e-12);
  return div(scale(cov, 2.0), den);
}

Tensor total_loss(const Tensor& x, const Tensor& y, double ccc_weight) {
  Tensor concordance_gap = add_const(neg(ccc(x, y)), 1.0);
  return add(mse(x, y), scale(concordance_gap, ccc_weight));
}

double ccc_value(std::span<const double> x, std::span<const double> y) {
  Tensor tx = Tensor::from({x.size()}, {x.begin(), x.end()});
  Tensor ty = Tensor::from({y.size()}, {y.begin(), y.end()});
  return ccc(tx, ty).item();
}

double mean_ccc(std::span<const double> pred_arousal, std::span<const double> gold_arousal,
                std::span<const double> pred_valence, std::span<const double> gold_valence) {
  return 0.5 * (ccc_value(pred_arousal, gold_arousal) + ccc_value(pred_valence, gold_valence));
}

std::string format_metric_line(const std::string& split, const std::string& model,
                               double ccc_arousal, double ccc_valence) {
  char buf[192];
  std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%.17g,%.17g", split.c_str(), model.c_str(),
                ccc_arousal, ccc_valence, 0.5 * (ccc_arousal + ccc_valence));
  return buf;
}

}  // namespace affect
