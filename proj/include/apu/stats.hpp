#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "apu/errors.hpp"

namespace apu {

// Regularized incomplete beta via the modified Lentz continued fraction;
// standard approach, see e.g. Numerical Recipes 6.4.
namespace detail {

inline double betacf(double a, double b, double x) {
  constexpr double kFpMin = 1e-300;
  constexpr double kEps = 1e-16;
  constexpr int kMaxIter = 500;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge");
}

}  // namespace detail

/// I_x(a, b), the regularized incomplete beta function.
inline double incomplete_beta(double a, double b, double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::invalid_argument("incomplete_beta needs x in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * detail::betacf(a, b, x) / a;
  }
  return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

/// CDF of Student's t with nu degrees of freedom.
inline double student_t_cdf(double t, double nu) {
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return t > 0.0 ? 1.0 : 0.0;
  const double x = nu / (nu + t * t);
  const double half_tail = 0.5 * incomplete_beta(0.5 * nu, 0.5, x);
  return t >= 0.0 ? 1.0 - half_tail : half_tail;
}

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, n-1 denominator
  std::size_t n = 0;
};

inline Summary summarize(std::span<const double> values) {
  if (values.size() < 2) {
    throw DataError("summarize needs at least 2 values");
  }
  double mean = 0.0;
  for (const double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  return Summary{mean, std::sqrt(ss / static_cast<double>(values.size() - 1)),
                 values.size()};
}

struct TTestResult {
  double t = 0.0;
  double p = 1.0;  // two-sided
  bool degenerate = false;  // zero variance of differences with nonzero mean
};

/// Paired two-sided Student t-test on per-seed differences a_i - b_i.
inline TTestResult paired_ttest(std::span<const double> a,
                                std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DataError("paired t-test needs equally sized samples");
  }
  if (a.size() < 2) throw DataError("paired t-test needs n >= 2");
  const std::size_t n = a.size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
  const Summary s = summarize(diff);

  TTestResult r;
  if (s.stddev == 0.0) {
    if (s.mean == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = s.mean > 0.0 ? std::numeric_limits<double>::infinity()
                         : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
      r.degenerate = true;
    }
    return r;
  }
  const double nu = static_cast<double>(n - 1);
  r.t = s.mean / (s.stddev / std::sqrt(static_cast<double>(n)));
  // Two-sided p; equals I_{nu/(nu+t^2)}(nu/2, 1/2).
  r.p = incomplete_beta(0.5 * nu, 0.5, nu / (nu + r.t * r.t));
  return r;
}

}  // namespace apu
