#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "apu/errors.hpp"

namespace apu {

/// AdamW with the AMSGrad max-tracked second moment.  Weight decay is
/// decoupled: theta <- theta - eta*lambda*theta happens before the adaptive
/// step and never enters the moment estimates.
class AdamW {
 public:
  AdamW(std::size_t param_count, double eta, double lambda, double beta1 = 0.9,
        double beta2 = 0.999, double eps = 1e-8)
      : eta_(eta),
        lambda_(lambda),
        beta1_(beta1),
        beta2_(beta2),
        eps_(eps),
        m_(param_count, 0.0),
        v_(param_count, 0.0),
        v_max_(param_count, 0.0) {}

  std::int64_t step_count() const { return t_; }
  double eta() const { return eta_; }
  double lambda() const { return lambda_; }

  /// One update.  eta_scale attenuates the learning rate for this step only
  /// (the defit steps use eta_scale = gamma).  Throws on non-finite gradients.
  void step(std::span<double> params, std::span<const double> grad,
            double eta_scale = 1.0) {
    if (params.size() != m_.size() || grad.size() != m_.size()) {
      throw std::invalid_argument("optimizer size mismatch");
    }
    for (const double g : grad) {
      if (!std::isfinite(g)) {
        throw TrainingDiverged("non-finite gradient at optimizer step " +
                               std::to_string(t_ + 1));
      }
    }
    ++t_;
    const double lr = eta_ * eta_scale;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < m_.size(); ++i) {
      params[i] -= lr * lambda_ * params[i];
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
      if (v_[i] > v_max_[i]) v_max_[i] = v_[i];
      const double m_hat = m_[i] / bc1;
      const double v_hat = v_max_[i] / bc2;
      params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }

 private:
  double eta_;
  double lambda_;
  double beta1_;
  double beta2_;
  double eps_;
  std::int64_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
  std::vector<double> v_max_;
};

}  // namespace apu
