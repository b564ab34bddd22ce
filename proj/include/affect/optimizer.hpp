#pragma once

#include <vector>

#include "affect/config.hpp"
#include "affect/tensor.hpp"

namespace affect {

struct OptimizerSettings {
  OptimizerKind kind = OptimizerKind::Adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static OptimizerSettings from(const PipelineConfig& c) {
    return {c.optimizer, c.learning_rate, c.adam_beta1, c.adam_beta2, c.adam_eps};
  }
};

/// Adam (bias-corrected) or plain SGD over a fixed parameter list.
/// A non-finite gradient aborts the step before any parameter changes.
class Optimizer {
 public:
  Optimizer(std::vector<Tensor> params, OptimizerSettings settings);

  void zero_grad();
  void step();

 private:
  std::vector<Tensor> params_;
  OptimizerSettings settings_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t t_ = 0;
};

}  // namespace affect
