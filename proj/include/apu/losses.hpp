#pragma once

#include <cmath>
#include <stdexcept>

#include "apu/errors.hpp"

namespace apu {

/// Margin losses for ERM plus the zero-one loss for evaluation.
/// All are functions of the margin m = score * yhat.
enum class LossKind { logistic, sigmoid, zero_one };

inline const char* loss_name(LossKind k) {
  switch (k) {
    case LossKind::logistic: return "logistic";
    case LossKind::sigmoid: return "sigmoid";
    case LossKind::zero_one: return "zero_one";
  }
  return "?";
}

/// Numerically stable logistic sigmoid.
inline double sigmoid_fn(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// ln(1 + exp(-m)) without overflow for any finite m.
inline double log1p_exp_neg(double m) {
  if (m >= 0.0) {
    return std::log1p(std::exp(-m));
  }
  return -m + std::log1p(std::exp(m));
}

/// loss(score, yhat) for predicted label yhat in {-1, +1}.
///   logistic: ln(1 + exp(-m));  sigmoid: 1 / (1 + exp(m));
///   zero_one: 1 if m <= 0 else 0; with m = score * yhat.
inline double loss_value(LossKind kind, double score, int yhat) {
  const double m = score * static_cast<double>(yhat);
  switch (kind) {
    case LossKind::logistic: return log1p_exp_neg(m);
    case LossKind::sigmoid: return sigmoid_fn(-m);
    case LossKind::zero_one: return m <= 0.0 ? 1.0 : 0.0;
  }
  return 0.0;
}

/// d loss / d score.  zero_one has no gradient and is rejected.
inline double loss_grad(LossKind kind, double score, int yhat) {
  const double y = static_cast<double>(yhat);
  const double m = score * y;
  switch (kind) {
    case LossKind::logistic:
      return -y * sigmoid_fn(-m);
    case LossKind::sigmoid: {
      const double s = sigmoid_fn(m);
      return -y * s * (1.0 - s);
    }
    case LossKind::zero_one:
      throw std::invalid_argument("zero_one loss has no gradient");
  }
  return 0.0;
}

}  // namespace apu
