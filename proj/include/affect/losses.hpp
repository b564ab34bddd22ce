#pragma once

#include <span>
#include <string>

#include "affect/tensor.hpp"

namespace affect {

/// (1/N) sum (x_i - y_i)^2 over two equal-length 1-D series.
Tensor mse(const Tensor& x, const Tensor& y);

/// Lin's concordance correlation coefficient with population moments:
/// 2*cov / (var_x + var_y + (mu_x - mu_y)^2), denominator guarded by 1e-12.
/// Two literally constant series compare means: 1 when equal, 0 otherwise.
Tensor ccc(const Tensor& x, const Tensor& y);

/// mse + ccc_weight * (1 - ccc), one target series at a time.
Tensor total_loss(const Tensor& x, const Tensor& y, double ccc_weight = 0.25);

double ccc_value(std::span<const double> x, std::span<const double> y);

/// (ccc(arousal) + ccc(valence)) / 2 over pooled series.
double mean_ccc(std::span<const double> pred_arousal, std::span<const double> gold_arousal,
                std::span<const double> pred_valence, std::span<const double> gold_valence);

/// Report line "split,model,ccc_arousal,ccc_valence,mean_ccc".
std::string format_metric_line(const std::string& split, const std::string& model,
                               double ccc_arousal, double ccc_valence);

}  // namespace affect
