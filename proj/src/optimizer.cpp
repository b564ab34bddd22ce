#include "affect/optimizer.hpp"

#include <cmath>

#include "affect/errors.hpp"

namespace affect {

Optimizer::Optimizer(std::vector<Tensor> params, OptimizerSettings settings)
    : params_(std::move(params)), settings_(settings) {
  m_.resize(params_.size());
  v_.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    m_[i].assign(params_[i].numel(), 0.0);
    v_[i].assign(params_[i].numel(), 0.0);
  }
}

void Optimizer::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Optimizer::step() {
  // validate first so a bad gradient leaves every parameter untouched
  for (const auto& p : params_) {
    if (!p.has_grad()) continue;
    for (double g : p.grad())
      if (!std::isfinite(g)) throw NumericError("optimizer step aborted: non-finite gradient");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(settings_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(settings_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto vals = params_[i].mutable_values();
    const bool has = params_[i].has_grad();
    if (settings_.kind == OptimizerKind::Sgd) {
      if (!has) continue;
      auto g = params_[i].grad();
      for (std::size_t j = 0; j < vals.size(); ++j) vals[j] -= settings_.lr * g[j];
      continue;
    }
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < vals.size(); ++j) {
      const double g = has ? params_[i].grad()[j] : 0.0;
      m[j] = settings_.beta1 * m[j] + (1.0 - settings_.beta1) * g;
      v[j] = settings_.beta2 * v[j] + (1.0 - settings_.beta2) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      vals[j] -= settings_.lr * mhat / (std::sqrt(vhat) + settings_.eps);
    }
  }
}

}  // namespace affect
