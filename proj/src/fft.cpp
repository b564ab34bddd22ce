#include "affect/fft.hpp"

#include <cmath>

#include "affect/errors.hpp"

namespace affect {

namespace {
constexpr double kTau = 6.28318530717958647692528676655900577;

void check_equal_lengths(std::size_t a, std::size_t b, const char* op) {
  if (a != b)
    throw DimensionError(std::string(op) + ": length mismatch " + std::to_string(a) + " vs " +
                         std::to_string(b));
  if (a == 0) throw DimensionError(std::string(op) + ": empty operands");
}
}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (!is_power_of_two(n)) throw ContractError("fft_inplace: length must be a power of two");

  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? kTau : -kTau) / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& v : a) v *= inv;
  }
}

std::vector<std::complex<double>> fft_real(const std::vector<double>& x) {
  std::vector<std::complex<double>> a(x.begin(), x.end());
  fft_inplace(a, false);
  return a;
}

std::vector<double> circular_convolve_direct(const std::vector<double>& a, const std::vector<double>& b) {
  check_equal_lengths(a.size(), b.size(), "circular_convolve");
  const std::size_t d = a.size();
  std::vector<double> out(d, 0.0);
  for (std::size_t t = 0; t < d; ++t) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += a[k] * b[(t + d - k) % d];
    out[t] = s;
  }
  return out;
}

std::vector<double> circular_convolve_fft(const std::vector<double>& a, const std::vector<double>& b) {
  check_equal_lengths(a.size(), b.size(), "circular_convolve");
  auto fa = fft_real(a);
  auto fb = fft_real(b);
  for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
  fft_inplace(fa, true);
  std::vector<double> out(fa.size());
  for (std::size_t i = 0; i < fa.size(); ++i) out[i] = fa[i].real();
  return out;
}

std::vector<double> circular_convolve(const std::vector<double>& a, const std::vector<double>& b) {
  check_equal_lengths(a.size(), b.size(), "circular_convolve");
  return is_power_of_two(a.size()) ? circular_convolve_fft(a, b) : circular_convolve_direct(a, b);
}

std::vector<double> circular_correlate(const std::vector<double>& a, const std::vector<double>& b) {
  check_equal_lengths(a.size(), b.size(), "circular_correlate");
  const std::size_t d = a.size();
  if (is_power_of_two(d)) {
    auto fa = fft_real(a);
    auto fb = fft_real(b);
    for (std::size_t i = 0; i < d; ++i) fa[i] *= std::conj(fb[i]);
    fft_inplace(fa, true);
    std::vector<double> out(d);
    for (std::size_t i = 0; i < d; ++i) out[i] = fa[i].real();
    return out;
  }
  std::vector<double> out(d, 0.0);
  for (std::size_t s = 0; s < d; ++s) {
    double acc = 0.0;
    for (std::size_t t = 0; t < d; ++t) acc += a[t] * b[(t + d - s) % d];
    out[s] = acc;
  }
  return out;
}

}  // namespace affect
