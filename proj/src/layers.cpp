#include "affect/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "affect/errors.hpp"

namespace affect {

using detail::Node;

namespace {

std::shared_ptr<Node> op_node(Shape shape, std::vector<double> value,
                              std::initializer_list<std::shared_ptr<Node>> inputs,
                              std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  for (const auto& in : inputs)
    if (in->requires_grad) n->requires_grad = true;
  if (n->requires_grad) {
    for (const auto& in : inputs)
      if (in->requires_grad) n->parents.push_back(in);
    n->backprop = std::move(backprop);
  }
  n->id = detail::next_node_id();
  return n;
}

void check_finite(const std::vector<double>& v, const char* op) {
  for (double x : v)
    if (!std::isfinite(x)) throw NumericError(std::string(op) + ": non-finite input");
}

}  // namespace

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(-limit, limit);
  Tensor t = Tensor::from(std::move(shape), std::move(v));
  t.set_requires_grad(true);
  return t;
}

DenseParams make_dense(std::size_t in, std::size_t out, Rng& rng) {
  DenseParams p;
  p.W = glorot_uniform({in, out}, in, out, rng);
  p.b = Tensor::zeros({out});
  p.b.set_requires_grad(true);
  return p;
}

Conv3dParams make_conv3d(std::size_t co, std::size_t ci, std::size_t k, Rng& rng) {
  Conv3dParams p;
  p.kernels = glorot_uniform({co, ci, k, k, k}, ci * k * k * k, co, rng);
  p.bias = Tensor::zeros({co});
  p.bias.set_requires_grad(true);
  return p;
}

Tensor dense(const Tensor& x, const DenseParams& p) {
  return add_rowwise(matmul(x, p.W), p.b);
}

Tensor softmax_rows(const Tensor& x) {
  auto xn = x.node();
  const std::size_t rank = x.rank();
  if (rank != 1 && rank != 2)
    throw DimensionError("softmax_rows: expected 1-D or 2-D input, got " + shape_str(x.shape()));
  check_finite(xn->value, "softmax_rows");
  const std::size_t cols = x.shape()[rank - 1];
  const std::size_t rows = rank == 1 ? 1 : x.shape()[0];

  std::vector<double> out(xn->value.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xn->value.data() + r * cols;
    double* o = out.data() + r * cols;
    double mx = in[0];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, in[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      o[j] = std::exp(in[j] - mx);
      s += o[j];
    }
    for (std::size_t j = 0; j < cols; ++j) o[j] /= s;
  }

  auto node = op_node(x.shape(), std::move(out), {xn}, [xn, rows, cols](Node& self) {
    if (self.grad.empty()) return;
    auto& gx = xn->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.value.data() + r * cols;
      const double* g = self.grad.data() + r * cols;
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += g[j] * y[j];
      double* o = gx.data() + r * cols;
      for (std::size_t j = 0; j < cols; ++j) o[j] += y[j] * (g[j] - dot);
    }
  });
  return Tensor(node);
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  auto xn = x.node();
  auto gn = gamma.node();
  auto bn = beta.node();
  const std::size_t rank = x.rank();
  if (rank != 1 && rank != 2)
    throw DimensionError("layer_norm: expected 1-D or 2-D input, got " + shape_str(x.shape()));
  const std::size_t cols = x.shape()[rank - 1];
  const std::size_t rows = rank == 1 ? 1 : x.shape()[0];
  if (gamma.shape() != Shape{cols} || beta.shape() != Shape{cols})
    throw DimensionError("layer_norm: gamma/beta must be [" + std::to_string(cols) + "], got " +
                         shape_str(gamma.shape()) + " and " + shape_str(beta.shape()));

  std::vector<double> out(xn->value.size());
  std::vector<double> inv_sd(rows);
  std::vector<double> mu(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xn->value.data() + r * cols;
    double m = 0.0;
    for (std::size_t j = 0; j < cols; ++j) m += in[j];
    m /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t j = 0; j < cols; ++j) var += (in[j] - m) * (in[j] - m);
    var /= static_cast<double>(cols);
    const double inv = 1.0 / std::sqrt(var + eps);
    mu[r] = m;
    inv_sd[r] = inv;
    double* o = out.data() + r * cols;
    for (std::size_t j = 0; j < cols; ++j) o[j] = (in[j] - m) * inv * gn->value[j] + bn->value[j];
  }

  auto node = op_node(x.shape(), std::move(out), {xn, gn, bn},
                      [xn, gn, bn, rows, cols, mu, inv_sd](Node& self) {
    if (self.grad.empty()) return;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* in = xn->value.data() + r * cols;
      const double* g = self.grad.data() + r * cols;
      const double inv = inv_sd[r];
      const double m = mu[r];
      if (bn->requires_grad) {
        auto& gb = bn->grad_buffer();
        for (std::size_t j = 0; j < cols; ++j) gb[j] += g[j];
      }
      if (gn->requires_grad) {
        auto& gg = gn->grad_buffer();
        for (std::size_t j = 0; j < cols; ++j) gg[j] += g[j] * (in[j] - m) * inv;
      }
      if (xn->requires_grad) {
        auto& gx = xn->grad_buffer();
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
          const double gy = g[j] * gn->value[j];
          const double xh = (in[j] - m) * inv;
          s1 += gy;
          s2 += gy * xh;
        }
        s1 /= static_cast<double>(cols);
        s2 /= static_cast<double>(cols);
        for (std::size_t j = 0; j < cols; ++j) {
          const double gy = g[j] * gn->value[j];
          const double xh = (in[j] - m) * inv;
          gx[r * cols + j] += inv * (gy - s1 - xh * s2);
        }
      }
    }
  });
  return Tensor(node);
}

Tensor conv1d_valid(const Tensor& x, const Tensor& kernels) {
  auto xn = x.node();
  auto kn = kernels.node();
  if (x.rank() != 2 || kernels.rank() != 3)
    throw DimensionError("conv1d_valid: expected x [L x k] and kernels [f x w x k], got " +
                         shape_str(x.shape()) + " and " + shape_str(kernels.shape()));
  const std::size_t L = x.shape()[0], k = x.shape()[1];
  const std::size_t f = kernels.shape()[0], w = kernels.shape()[1];
  if (kernels.shape()[2] != k)
    throw DimensionError("conv1d_valid: kernel width " + shape_str(kernels.shape()) +
                         " does not span input columns " + shape_str(x.shape()));
  if (L < w)
    throw DimensionError("conv1d_valid: input length " + std::to_string(L) +
                         " shorter than kernel size " + std::to_string(w));
  const std::size_t T = L - w + 1;

  std::vector<double> out(T * f, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const double* win = xn->value.data() + t * k;
    double* orow = out.data() + t * f;
    for (std::size_t j = 0; j < f; ++j) {
      const double* ker = kn->value.data() + j * w * k;
      double s = 0.0;
      for (std::size_t u = 0; u < w * k; ++u) s += win[u] * ker[u];
      orow[j] = s;
    }
  }

  auto node = op_node({T, f}, std::move(out), {xn, kn}, [xn, kn, T, f, w, k](Node& self) {
    if (self.grad.empty()) return;
    if (xn->requires_grad) {
      auto& gx = xn->grad_buffer();
      for (std::size_t t = 0; t < T; ++t) {
        const double* grow = self.grad.data() + t * f;
        double* gwin = gx.data() + t * k;
        for (std::size_t j = 0; j < f; ++j) {
          const double g = grow[j];
          if (g == 0.0) continue;
          const double* ker = kn->value.data() + j * w * k;
          for (std::size_t u = 0; u < w * k; ++u) gwin[u] += g * ker[u];
        }
      }
    }
    if (kn->requires_grad) {
      auto& gk = kn->grad_buffer();
      for (std::size_t t = 0; t < T; ++t) {
        const double* grow = self.grad.data() + t * f;
        const double* win = xn->value.data() + t * k;
        for (std::size_t j = 0; j < f; ++j) {
          const double g = grow[j];
          if (g == 0.0) continue;
          double* gker = gk.data() + j * w * k;
          for (std::size_t u = 0; u < w * k; ++u) gker[u] += g * win[u];
        }
      }
    }
  });
  return Tensor(node);
}

Tensor conv3d_same(const Tensor& x, const Tensor& kernels) {
  auto xn = x.node();
  auto kn = kernels.node();
  if (x.rank() != 4 || kernels.rank() != 5)
    throw DimensionError("conv3d_same: expected x [ci x D x H x W] and kernels [co x ci x kd x kh x kw], got " +
                         shape_str(x.shape()) + " and " + shape_str(kernels.shape()));
  const std::size_t ci = x.shape()[0], D = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  const std::size_t co = kernels.shape()[0];
  if (kernels.shape()[1] != ci)
    throw DimensionError("conv3d_same: input channels " + shape_str(x.shape()) +
                         " do not match kernels " + shape_str(kernels.shape()));
  const std::size_t kd = kernels.shape()[2], kh = kernels.shape()[3], kw = kernels.shape()[4];
  if (kd % 2 == 0 || kh % 2 == 0 || kw % 2 == 0)
    throw DimensionError("conv3d_same: kernel extents must be odd for same padding, got " +
                         shape_str(kernels.shape()));
  const std::ptrdiff_t pd = static_cast<std::ptrdiff_t>(kd / 2);
  const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(kh / 2);
  const std::ptrdiff_t pw = static_cast<std::ptrdiff_t>(kw / 2);
  const std::size_t plane = H * W, vol = D * plane;
  const auto sD = static_cast<std::ptrdiff_t>(D);
  const auto sH = static_cast<std::ptrdiff_t>(H);
  const auto sW = static_cast<std::ptrdiff_t>(W);

  std::vector<double> out(co * vol, 0.0);
  // Per-tap accumulation: for each kernel offset the inner x loop touches
  // contiguous input and output rows, which keeps the hot loop vectorizable.
  for (std::size_t oc = 0; oc < co; ++oc) {
    double* odata = out.data() + oc * vol;
    for (std::size_t icn = 0; icn < ci; ++icn) {
      const double* idata = xn->value.data() + icn * vol;
      const double* kbase = kn->value.data() + (oc * ci + icn) * kd * kh * kw;
      for (std::size_t a = 0; a < kd; ++a) {
        const std::ptrdiff_t dz = static_cast<std::ptrdiff_t>(a) - pd;
        const std::size_t z0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -dz));
        const std::size_t z1 = static_cast<std::size_t>(std::min<std::ptrdiff_t>(sD, sD - dz));
        for (std::size_t b = 0; b < kh; ++b) {
          const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(b) - ph;
          const std::size_t y0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -dy));
          const std::size_t y1 = static_cast<std::size_t>(std::min<std::ptrdiff_t>(sH, sH - dy));
          for (std::size_t c = 0; c < kw; ++c) {
            const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(c) - pw;
            const std::size_t x0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -dx));
            const std::size_t x1 = static_cast<std::size_t>(std::min<std::ptrdiff_t>(sW, sW - dx));
            const double wgt = kbase[(a * kh + b) * kw + c];
            if (wgt == 0.0 || z0 >= z1 || y0 >= y1 || x0 >= x1) continue;
            for (std::size_t z = z0; z < z1; ++z) {
              const double* iplane = idata + static_cast<std::size_t>(static_cast<std::ptrdiff_t>(z) + dz) * plane;
              double* oplane = odata + z * plane;
              for (std::size_t y = y0; y < y1; ++y) {
                const double* irow = iplane + static_cast<std::size_t>(static_cast<std::ptrdiff_t>(y) + dy) * W;
                double* orow = oplane + y * W;
                for (std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(x0); xx < static_cast<std::ptrdiff_t>(x1); ++xx)
                  orow[xx] += wgt * irow[xx + dx];
              }
            }
          }
        }
      }
    }
  }

  auto node = op_node({co, D, H, W}, std::move(out), {xn, kn},
                      [xn, kn, ci, co, D, H, W, kd, kh, kw, pd, ph, pw, plane, vol](Node& self) {
    if (self.grad.empty()) return;
    const auto sD = static_cast<std::ptrdiff_t>(D);
    const auto sH = static_cast<std::ptrdiff_t>(H);
    const auto sW = static_cast<std::ptrdiff_t>(W);
    for (std::size_t oc = 0; oc < co; ++oc) {
      const double* gdata = self.grad.data() + oc * vol;
      for (std::size_t icn = 0; icn < ci; ++icn) {
        const std::size_t kbase_off = (oc * ci + icn) * kd * kh * kw;
        for (std::size_t a = 0; a < kd; ++a) {
          const std::ptrdiff_t dz = static_cast<std::ptrdiff_t>(a) - pd;
          const std::size_t z0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -dz));
          const std::size_t z1 = static_cast<std::size_t>(std::min<std::ptrdiff_t>(sD, sD - dz));
          for (std::size_t b = 0; b < kh; ++b) {
            const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(b) - ph;
            const std::size_t y0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -dy));
            const std::size_t y1 = static_cast<std::size_t>(std::min<std::ptrdiff_t>(sH, sH - dy));
            for (std::size_t c = 0; c < kw; ++c) {
              const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(c) - pw;
              const std::size_t x0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -dx));
              const std::size_t x1 = static_cast<std::size_t>(std::min<std::ptrdiff_t>(sW, sW - dx));
              if (z0 >= z1 || y0 >= y1 || x0 >= x1) continue;
              const double wgt = kn->value[kbase_off + (a * kh + b) * kw + c];
              double tap_grad = 0.0;
              const bool need_x = xn->requires_grad && wgt != 0.0;
              const bool need_k = kn->requires_grad;
              if (!need_x && !need_k) continue;
              double* gx = xn->requires_grad ? xn->grad_buffer().data() + icn * vol : nullptr;
              const double* idata = xn->value.data() + icn * vol;
              for (std::size_t z = z0; z < z1; ++z) {
                const std::size_t ziz = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(z) + dz);
                const double* grow0 = gdata + z * plane;
                const double* iplane = idata + ziz * plane;
                double* gplane = gx ? gx + ziz * plane : nullptr;
                for (std::size_t y = y0; y < y1; ++y) {
                  const std::size_t yiy = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(y) + dy);
                  const double* grow = grow0 + y * W;
                  const double* irow = iplane + yiy * W;
                  if (need_k) {
                    double s = 0.0;
                    for (std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(x0); xx < static_cast<std::ptrdiff_t>(x1); ++xx)
                      s += grow[xx] * irow[xx + dx];
                    tap_grad += s;
                  }
                  if (need_x) {
                    double* gxrow = gplane + yiy * W;
                    for (std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(x0); xx < static_cast<std::ptrdiff_t>(x1); ++xx)
                      gxrow[xx + dx] += wgt * grow[xx];
                  }
                }
              }
              if (need_k) kn->grad_buffer()[kbase_off + (a * kh + b) * kw + c] += tap_grad;
            }
          }
        }
      }
    }
  });
  return Tensor(node);
}

Tensor add_channelwise(const Tensor& x, const Tensor& bias) {
  auto xn = x.node();
  auto bn = bias.node();
  if (x.rank() < 1 || bias.rank() != 1 || x.shape()[0] != bias.shape()[0])
    throw DimensionError("add_channelwise: " + shape_str(x.shape()) + " vs bias " +
                         shape_str(bias.shape()));
  const std::size_t c = x.shape()[0];
  const std::size_t slab = x.numel() / c;
  std::vector<double> out(xn->value);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double bv = bn->value[ch];
    double* o = out.data() + ch * slab;
    for (std::size_t i = 0; i < slab; ++i) o[i] += bv;
  }
  auto node = op_node(x.shape(), std::move(out), {xn, bn}, [xn, bn, c, slab](Node& self) {
    if (self.grad.empty()) return;
    if (xn->requires_grad) {
      auto& gx = xn->grad_buffer();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
    }
    if (bn->requires_grad) {
      auto& gb = bn->grad_buffer();
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double* g = self.grad.data() + ch * slab;
        double s = 0.0;
        for (std::size_t i = 0; i < slab; ++i) s += g[i];
        gb[ch] += s;
      }
    }
  });
  return Tensor(node);
}

Tensor max_pool3d(const Tensor& x, std::size_t window) {
  auto xn = x.node();
  if (x.rank() != 4)
    throw DimensionError("max_pool3d: expected [c x D x H x W], got " + shape_str(x.shape()));
  if (window == 0) throw ContractError("max_pool3d: window must be positive");
  const std::size_t c = x.shape()[0], D = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  const auto ceil_div = [](std::size_t a, std::size_t b) { return (a + b - 1) / b; };
  const std::size_t oD = ceil_div(D, window), oH = ceil_div(H, window), oW = ceil_div(W, window);
  const std::size_t plane = H * W, vol = D * plane;
  const std::size_t oplane = oH * oW, ovol = oD * oplane;

  std::vector<double> out(c * ovol);
  std::vector<std::size_t> arg(c * ovol);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* in = xn->value.data() + ch * vol;
    for (std::size_t oz = 0; oz < oD; ++oz) {
      for (std::size_t oy = 0; oy < oH; ++oy) {
        for (std::size_t ox = 0; ox < oW; ++ox) {
          const std::size_t z1 = std::min(D, (oz + 1) * window);
          const std::size_t y1 = std::min(H, (oy + 1) * window);
          const std::size_t x1 = std::min(W, (ox + 1) * window);
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_idx = 0;
          for (std::size_t z = oz * window; z < z1; ++z)
            for (std::size_t y = oy * window; y < y1; ++y)
              for (std::size_t xx = ox * window; xx < x1; ++xx) {
                const std::size_t idx = z * plane + y * W + xx;
                if (in[idx] > best) {
                  best = in[idx];
                  best_idx = idx;
                }
              }
          const std::size_t o = (oz * oH + oy) * oW + ox;
          out[ch * ovol + o] = best;
          arg[ch * ovol + o] = ch * vol + best_idx;
        }
      }
    }
  }

  auto node = op_node({c, oD, oH, oW}, std::move(out), {xn}, [xn, arg](Node& self) {
    if (self.grad.empty()) return;
    auto& gx = xn->grad_buffer();
    for (std::size_t i = 0; i < arg.size(); ++i) gx[arg[i]] += self.grad[i];
  });
  return Tensor(node);
}

Tensor max_over_time(const Tensor& x) {
  auto xn = x.node();
  if (x.rank() != 2)
    throw DimensionError("max_over_time: expected [L x f], got " + shape_str(x.shape()));
  const std::size_t L = x.shape()[0], f = x.shape()[1];
  std::vector<double> out(f);
  std::vector<std::size_t> arg(f);
  for (std::size_t j = 0; j < f; ++j) {
    double best = xn->value[j];
    std::size_t bi = 0;
    for (std::size_t t = 1; t < L; ++t) {
      const double v = xn->value[t * f + j];
      if (v > best) {
        best = v;
        bi = t;
      }
    }
    out[j] = best;
    arg[j] = bi * f + j;
  }
  auto node = op_node({f}, std::move(out), {xn}, [xn, arg](Node& self) {
    if (self.grad.empty()) return;
    auto& gx = xn->grad_buffer();
    for (std::size_t j = 0; j < arg.size(); ++j) gx[arg[j]] += self.grad[j];
  });
  return Tensor(node);
}

}  // namespace affect
