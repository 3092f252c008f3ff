#include "apu/data.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

namespace {

using apu::Example;
using apu::Role;
using apu::SampleSet;
using apu::SplitSpec;

std::vector<Example> constant_pool(double value, std::size_t n) {
  std::vector<Example> pool;
  for (std::size_t i = 0; i < n; ++i) {
    pool.emplace_back(std::vector<double>{value, -value});
  }
  return pool;
}

TEST(Example, RejectsNonFiniteFeatures) {
  EXPECT_THROW(Example({1.0, std::nan("")}), apu::DataError);
  EXPECT_THROW(Example({std::numeric_limits<double>::infinity()}),
               apu::DataError);
}

TEST(SampleSet, RejectsMixedDimensions) {
  std::vector<Example> ex;
  ex.emplace_back(std::vector<double>{1.0, 2.0});
  ex.emplace_back(std::vector<double>{1.0});
  EXPECT_THROW(SampleSet(Role::positive, std::move(ex)), apu::DataError);
}

TEST(Split, RoundedSizes) {
  SampleSet ten(Role::positive, constant_pool(1.0, 10));
  const auto [train10, valid10] = split_train_valid(ten, SplitSpec{0.2, 1});
  EXPECT_EQ(train10.size(), 8u);
  EXPECT_EQ(valid10.size(), 2u);

  SampleSet five(Role::positive, constant_pool(1.0, 5));
  const auto [train5, valid5] = split_train_valid(five, SplitSpec{0.2, 1});
  EXPECT_EQ(train5.size(), 4u);
  EXPECT_EQ(valid5.size(), 1u);
}

TEST(Split, DeterministicAndDisjoint) {
  std::vector<Example> ex;
  for (int i = 0; i < 20; ++i) {
    ex.emplace_back(std::vector<double>{static_cast<double>(i)});
  }
  SampleSet set(Role::unlabeled_train, std::move(ex));

  const auto [tr_a, va_a] = split_train_valid(set, SplitSpec{0.25, 99});
  const auto [tr_b, va_b] = split_train_valid(set, SplitSpec{0.25, 99});
  ASSERT_EQ(tr_a.size(), tr_b.size());
  for (std::size_t i = 0; i < tr_a.size(); ++i) {
    EXPECT_EQ(tr_a.example(i).features()[0], tr_b.example(i).features()[0]);
  }

  std::multiset<double> together;
  for (std::size_t i = 0; i < tr_a.size(); ++i) {
    together.insert(tr_a.example(i).features()[0]);
  }
  for (std::size_t i = 0; i < va_a.size(); ++i) {
    together.insert(va_a.example(i).features()[0]);
  }
  EXPECT_EQ(together.size(), 20u);
  std::set<double> unique(together.begin(), together.end());
  EXPECT_EQ(unique.size(), 20u);  // disjoint partition, nothing repeated
}

TEST(Split, TooSmallRejected) {
  SampleSet tiny(Role::positive, constant_pool(1.0, 4));
  EXPECT_THROW(split_train_valid(tiny, SplitSpec{0.2, 1}), apu::DataError);
}

TEST(CaseControl, PriorZeroDrawsOnlyNegatives) {
  const auto pos = constant_pool(1.0, 3);
  const auto neg = constant_pool(-1.0, 3);
  const SampleSet s =
      apu::case_control_sample(pos, neg, 50, 0.0, 7, Role::unlabeled_train);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(s.example(i).features()[0], -1.0);
    EXPECT_EQ(*s.example(i).true_label(), -1);
  }
}

TEST(CaseControl, PriorOneRejected) {
  const auto pos = constant_pool(1.0, 3);
  const auto neg = constant_pool(-1.0, 3);
  EXPECT_THROW(apu::case_control_sample(pos, neg, 10, 1.0, 7), apu::DataError);
}

TEST(CaseControl, EmptyPoolWithMassRejected) {
  const auto neg = constant_pool(-1.0, 3);
  EXPECT_THROW(apu::case_control_sample({}, neg, 10, 0.5, 7), apu::DataError);
  EXPECT_THROW(apu::case_control_sample(neg, {}, 10, 0.5, 7), apu::DataError);
}

// Binomial concentration: at n = 1e5 the positive fraction deviates from 0.5
// by more than 0.01 (> 6 sigma) with negligible probability.
TEST(CaseControl, PositiveFractionConcentrates) {
  const auto pos = constant_pool(1.0, 4);
  const auto neg = constant_pool(-1.0, 4);
  const SampleSet s = apu::case_control_sample(pos, neg, 100000, 0.5, 13);
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (*s.example(i).true_label() == 1) ++n_pos;
  }
  EXPECT_NEAR(static_cast<double>(n_pos) / 100000.0, 0.5, 0.01);
}

TEST(CaseControl, ExactCountsFlag) {
  const auto pos = constant_pool(1.0, 4);
  const auto neg = constant_pool(-1.0, 4);
  const SampleSet s = apu::case_control_sample(pos, neg, 101, 0.5, 13,
                                               Role::unlabeled_train, true);
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (*s.example(i).true_label() == 1) ++n_pos;
  }
  EXPECT_EQ(n_pos, 51u);  // round(0.5 * 101)
}

TEST(CaseControl, BitReproducible) {
  std::vector<Example> pos;
  std::vector<Example> neg;
  apu::Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    pos.emplace_back(std::vector<double>{rng.normal()});
    neg.emplace_back(std::vector<double>{rng.normal()});
  }
  const SampleSet a = apu::case_control_sample(pos, neg, 64, 0.3, 555);
  const SampleSet b = apu::case_control_sample(pos, neg, 64, 0.3, 555);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.example(i).features()[0], b.example(i).features()[0]);
  }
}

TEST(PriorPair, BoundsEnforced) {
  EXPECT_THROW(apu::PriorPair(1.0, 0.5), apu::DataError);
  EXPECT_THROW(apu::PriorPair(0.5, -0.1), apu::DataError);
  EXPECT_NO_THROW(apu::PriorPair(0.0, 0.999));
}

}  // namespace
