#include "apu/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "apu/rng.hpp"

namespace {

TEST(Summarize, HandValues) {
  const std::vector<double> v{0.1, 0.2, 0.3};
  const apu::Summary s = apu::summarize(v);
  EXPECT_NEAR(s.mean, 0.2, 1e-15);
  EXPECT_NEAR(s.stddev, 0.1, 1e-12);
  EXPECT_EQ(s.n, 3u);
}

TEST(Summarize, IdenticalValuesHaveZeroStd) {
  const std::vector<double> v{0.42, 0.42, 0.42, 0.42};
  const apu::Summary s = apu::summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 0.42);
  EXPECT_DOUBLE_EQ(s.stddev, 0.0);
}

TEST(Summarize, TooFewValuesRejected) {
  const std::vector<double> v{0.1};
  EXPECT_THROW(apu::summarize(v), apu::DataError);
}

// Welford's online algorithm as the independent second pass.
TEST(Summarize, MatchesWelford) {
  apu::Rng rng(131);
  std::vector<double> v(257);
  for (double& x : v) x = 10.0 * rng.normal() + 3.0;

  double mean = 0.0;
  double m2 = 0.0;
  std::size_t count = 0;
  for (const double x : v) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }
  const double welford_std = std::sqrt(m2 / static_cast<double>(count - 1));

  const apu::Summary s = apu::summarize(v);
  EXPECT_NEAR(s.mean, mean, 1e-12);
  EXPECT_NEAR(s.stddev, welford_std, 1e-12);
}

TEST(IncompleteBeta, ClosedForms) {
  // I_x(1, 1) = x.
  for (const double x : {0.0, 0.1, 0.5, 0.9, 1.0}) {
    EXPECT_NEAR(apu::incomplete_beta(1.0, 1.0, x), x, 1e-14);
  }
  // Reflection identity.
  apu::Rng rng(137);
  for (int i = 0; i < 200; ++i) {
    const double a = 0.5 + 5.0 * rng.uniform();
    const double b = 0.5 + 5.0 * rng.uniform();
    const double x = rng.uniform();
    EXPECT_NEAR(apu::incomplete_beta(a, b, x) +
                    apu::incomplete_beta(b, a, 1.0 - x),
                1.0, 1e-12);
  }
}

TEST(StudentT, ClosedFormCdfs) {
  constexpr double kPi = 3.14159265358979323846;
  for (const double t : {-5.0, -1.3, -0.2, 0.0, 0.4, 2.7, 8.0}) {
    // nu = 1 is Cauchy.
    EXPECT_NEAR(apu::student_t_cdf(t, 1.0), 0.5 + std::atan(t) / kPi, 1e-12);
    // nu = 2 has the algebraic form 1/2 + t / (2 sqrt(2 + t^2)).
    EXPECT_NEAR(apu::student_t_cdf(t, 2.0),
                0.5 + t / (2.0 * std::sqrt(2.0 + t * t)), 1e-12);
  }
  EXPECT_EQ(apu::student_t_cdf(std::numeric_limits<double>::infinity(), 4.0),
            1.0);
}

TEST(PairedTTest, IdenticalSamples) {
  const std::vector<double> a{0.1, 0.2, 0.3, 0.4};
  const apu::TTestResult r = apu::paired_ttest(a, a);
  EXPECT_EQ(r.t, 0.0);
  EXPECT_EQ(r.p, 1.0);
  EXPECT_FALSE(r.degenerate);
}

TEST(PairedTTest, ConstantNonzeroDifferenceIsDegenerate) {
  const std::vector<double> a{2.0, 3.0, 4.0, 5.0};
  const std::vector<double> b{1.0, 2.0, 3.0, 4.0};
  const apu::TTestResult r = apu::paired_ttest(a, b);
  EXPECT_TRUE(r.degenerate);
  EXPECT_TRUE(std::isinf(r.t));
  EXPECT_GT(r.t, 0.0);
  EXPECT_EQ(r.p, 0.0);
}

// Frozen high-precision reference (40-digit evaluation of the regularized
// incomplete beta): differences (1.0, 0.8, 1.2, 0.9, 1.1).
TEST(PairedTTest, FrozenReferenceInstance) {
  const std::vector<double> a{1.0, 0.8, 1.2, 0.9, 1.1};
  const std::vector<double> b{0.0, 0.0, 0.0, 0.0, 0.0};
  const apu::TTestResult r = apu::paired_ttest(a, b);
  EXPECT_NEAR(r.t, 14.142135623730950488, 1e-12);
  EXPECT_NEAR(r.p, 1.4512817061319761973e-4, 1e-13);

  const std::vector<double> a2{0.12, 0.18, 0.11, 0.16, 0.13, 0.19};
  const std::vector<double> b2{0.10, 0.17, 0.13, 0.12, 0.12, 0.16};
  const apu::TTestResult r2 = apu::paired_ttest(a2, b2);
  EXPECT_NEAR(r2.t, 1.7718732696558549959, 1e-12);
  EXPECT_NEAR(r2.p, 0.13661753617335829704, 1e-12);
}

TEST(PairedTTest, SwapNegatesTPreservesP) {
  apu::Rng rng(139);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> a(6);
    std::vector<double> b(6);
    for (std::size_t j = 0; j < 6; ++j) {
      a[j] = rng.normal();
      b[j] = rng.normal();
    }
    const apu::TTestResult ab = apu::paired_ttest(a, b);
    const apu::TTestResult ba = apu::paired_ttest(b, a);
    ASSERT_NEAR(ab.t, -ba.t, 1e-12);
    ASSERT_NEAR(ab.p, ba.p, 1e-12);
  }
}

TEST(PairedTTest, SizeChecks) {
  const std::vector<double> a{1.0, 2.0};
  const std::vector<double> b{1.0};
  EXPECT_THROW(apu::paired_ttest(a, b), apu::DataError);
  const std::vector<double> one{1.0};
  EXPECT_THROW(apu::paired_ttest(one, one), apu::DataError);
}

}  // namespace
