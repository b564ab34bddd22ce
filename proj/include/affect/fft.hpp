#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace affect {

bool is_power_of_two(std::size_t n);

/// Iterative radix-2 transform; length must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

std::vector<std::complex<double>> fft_real(const std::vector<double>& x);

/// out[t] = sum_s a[s] * b[(t - s) mod d]. FFT path for power-of-two d,
/// direct O(d^2) otherwise.
std::vector<double> circular_convolve(const std::vector<double>& a, const std::vector<double>& b);
std::vector<double> circular_convolve_direct(const std::vector<double>& a, const std::vector<double>& b);
std::vector<double> circular_convolve_fft(const std::vector<double>& a, const std::vector<double>& b);

/// out[s] = sum_t a[t] * b[(t - s) mod d]; the adjoint of convolution by b.
std::vector<double> circular_correlate(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace affect
