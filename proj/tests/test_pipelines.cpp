#include "apu/pipelines.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "apu/synth.hpp"

namespace {

using apu::ApuDataset;
using apu::Correction;
using apu::DataView;
using apu::Example;
using apu::Model;
using apu::ModelShape;
using apu::PosteriorFn;
using apu::Role;
using apu::SampleSet;
using apu::ScenarioName;
using apu::Step2;
using apu::StepConfig;
using apu::SurrogateNegativeSet;
using apu::WeightingScheme;

SampleSet simple_points(std::vector<double> xs, Role role) {
  std::vector<Example> ex;
  for (const double x : xs) ex.emplace_back(std::vector<double>{x});
  return SampleSet(role, std::move(ex));
}

StepConfig linear_cfg(std::size_t dim, int epochs, double eta) {
  StepConfig cfg;
  cfg.shape.input_dim = dim;
  cfg.train.epochs = epochs;
  cfg.train.batches_per_epoch = 2;
  cfg.train.eta = eta;
  return cfg;
}

TEST(BuildSurrogate, SaturatedPosteriorGivesAllOnes) {
  const SampleSet utr = simple_points({1.0, 2.0, 3.0, 4.0}, Role::unlabeled_train);
  const PosteriorFn one = [](std::span<const double>) { return 1.0; };
  for (const WeightingScheme scheme :
       {WeightingScheme::soft, WeightingScheme::hard}) {
    const SurrogateNegativeSet sns = apu::build_surrogate(utr, one, scheme, 0.5);
    for (const double w : sns.weights()) EXPECT_EQ(w, 1.0);
  }
  // top_k keeps exactly round((1-pi) n) ones, ties broken by index order.
  const SurrogateNegativeSet topk =
      apu::build_surrogate(utr, one, WeightingScheme::top_k, 0.5);
  EXPECT_EQ(topk.weights(), (std::vector<double>{1.0, 1.0, 0.0, 0.0}));
}

TEST(BuildSurrogate, HardRoundingIsHalfUp) {
  const SampleSet utr = simple_points({0.0, 1.0, 2.0}, Role::unlabeled_train);
  const PosteriorFn post = [](std::span<const double> x) {
    if (x[0] == 0.0) return 0.7;
    if (x[0] == 1.0) return 0.49;
    return 0.5;
  };
  const SurrogateNegativeSet sns =
      apu::build_surrogate(utr, post, WeightingScheme::hard, 0.5);
  EXPECT_EQ(sns.weights(), (std::vector<double>{1.0, 0.0, 1.0}));
}

TEST(BuildSurrogate, TopKPicksHighestPosteriors) {
  const SampleSet utr = simple_points({0.0, 1.0, 2.0, 3.0}, Role::unlabeled_train);
  const std::vector<double> posts{0.9, 0.8, 0.2, 0.1};
  const PosteriorFn post = [&posts](std::span<const double> x) {
    return posts[static_cast<std::size_t>(x[0])];
  };
  const SurrogateNegativeSet sns =
      apu::build_surrogate(utr, post, WeightingScheme::top_k, 0.5);
  EXPECT_EQ(sns.weights(), (std::vector<double>{1.0, 1.0, 0.0, 0.0}));
}

TEST(BuildSurrogate, TopKCountInvariant) {
  apu::Rng rng(311);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + rng.uniform_int(40);
    const double pi = 0.9 * rng.uniform();
    std::vector<Example> ex;
    for (std::size_t i = 0; i < n; ++i) {
      ex.emplace_back(std::vector<double>{rng.normal()});
    }
    const SampleSet utr(Role::unlabeled_train, std::move(ex));
    apu::Rng post_rng = rng.fork(trial);
    std::vector<double> posts(n);
    for (double& p : posts) p = post_rng.uniform();
    const PosteriorFn post = [&](std::span<const double> x) {
      for (std::size_t i = 0; i < n; ++i) {
        if (utr.example(i).features()[0] == x[0]) return posts[i];
      }
      return 0.5;
    };
    const SurrogateNegativeSet sns =
        apu::build_surrogate(utr, post, WeightingScheme::top_k, pi);
    std::size_t ones = 0;
    for (const double w : sns.weights()) {
      ASSERT_TRUE(w == 0.0 || w == 1.0);
      if (w == 1.0) ++ones;
    }
    EXPECT_EQ(ones, static_cast<std::size_t>(std::llround(
                        (1.0 - pi) * static_cast<double>(n))));
  }
}

TEST(BuildSurrogate, WeightsOutsideUnitIntervalRejected) {
  const SampleSet utr = simple_points({1.0}, Role::unlabeled_train);
  const PosteriorFn bad = [](std::span<const double>) { return 1.5; };
  EXPECT_THROW(apu::build_surrogate(utr, bad, WeightingScheme::soft, 0.5),
               apu::DataError);
}

TEST(HardNegativeSet, DegenerateAndConcentration) {
  std::vector<Example> ex;
  apu::Rng rng(313);
  for (int i = 0; i < 10000; ++i) {
    ex.emplace_back(std::vector<double>{rng.normal()});
  }
  const SampleSet utr(Role::unlabeled_train, std::move(ex));

  const PosteriorFn zero = [](std::span<const double>) { return 0.0; };
  EXPECT_EQ(apu::build_hard_negative_set(utr, zero, 5).size(), 0u);

  const PosteriorFn one = [](std::span<const double>) { return 1.0; };
  EXPECT_EQ(apu::build_hard_negative_set(utr, one, 5).size(), 10000u);

  const PosteriorFn half = [](std::span<const double>) { return 0.5; };
  const std::size_t kept = apu::build_hard_negative_set(utr, half, 5).size();
  EXPECT_NEAR(static_cast<double>(kept), 5000.0, 200.0);
}

TEST(MisclassificationRate, AgainstConfusionMatrixOracle) {
  apu::Rng rng(317);
  std::vector<Example> ex;
  for (int i = 0; i < 500; ++i) {
    ex.emplace_back(std::vector<double>{rng.normal(), rng.normal()},
                    std::nullopt, rng.bernoulli(0.5) ? 1 : -1);
  }
  const SampleSet eval_set(Role::eval, std::move(ex));
  Model m(ModelShape{2, {}});
  m.params()[0] = 0.8;
  m.params()[1] = -0.3;

  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < eval_set.size(); ++i) {
    const Example& e = eval_set.example(i);
    const int pred = m.predict_sign(e.features());
    const int truth = *e.true_label();
    if (pred == 1 && truth == 1) ++tp;
    if (pred == 1 && truth == -1) ++fp;
    if (pred == -1 && truth == -1) ++tn;
    if (pred == -1 && truth == 1) ++fn;
  }
  const double oracle = static_cast<double>(fp + fn) /
                        static_cast<double>(tp + fp + tn + fn);
  EXPECT_DOUBLE_EQ(apu::misclassification_rate(m, eval_set), oracle);
}

TEST(MisclassificationRate, PerfectAndConstantModels) {
  std::vector<Example> ex;
  apu::Rng rng(319);
  for (int i = 0; i < 200; ++i) {
    const bool pos = i % 2 == 0;
    ex.emplace_back(
        std::vector<double>{(pos ? 4.0 : -4.0) + rng.normal(), rng.normal()},
        std::nullopt, pos ? 1 : -1);
  }
  const SampleSet eval_set(Role::eval, std::move(ex));

  Model perfect(ModelShape{2, {}});
  perfect.params()[0] = 1.0;
  EXPECT_EQ(apu::misclassification_rate(perfect, eval_set), 0.0);

  Model constant(ModelShape{2, {}});
  constant.params()[2] = 5.0;  // always predicts +1
  EXPECT_EQ(apu::misclassification_rate(constant, eval_set), 0.5);
}

TEST(MisclassificationRate, MissingLabelsRejected) {
  std::vector<Example> ex;
  ex.emplace_back(std::vector<double>{1.0});
  const SampleSet eval_set(Role::eval, std::move(ex));
  const Model m(ModelShape{1, {}});
  EXPECT_THROW(apu::misclassification_rate(m, eval_set), apu::DataError);
}

TEST(Step1, PosteriorInUnitIntervalAndAccurate) {
  const ApuDataset data =
      apu::make_scenario(ScenarioName::separable, 400, 400, 400, 400, 71);
  const auto [pos_tr, pos_va] = apu::detail::split_view(data.pos, 0.2, 1);
  const auto [utr_tr, utr_va] = apu::detail::split_view(data.unl_train, 0.2, 2);

  const StepConfig cfg = linear_cfg(2, 100, 0.05);
  const apu::Step1Result s1 = apu::train_step1_probabilistic(
      pos_tr, utr_tr, pos_va, utr_va, data.priors.train, cfg, 5);

  apu::Rng rng(73);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> x{12.0 * (rng.uniform() - 0.5),
                                12.0 * (rng.uniform() - 0.5)};
    const double p = s1.posterior(x);
    ASSERT_GT(p, 0.0);
    ASSERT_LT(p, 1.0);
  }

  // Separable scenario: hard-thresholded posterior labels U_tr accurately.
  EXPECT_LE(apu::step1_labeling_error(data.unl_train, s1.posterior), 0.05);

  // Determinism: rebuilding with the same seed gives the same posterior.
  const apu::Step1Result s1b = apu::train_step1_probabilistic(
      pos_tr, utr_tr, pos_va, utr_va, data.priors.train, cfg, 5);
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> x{rng.normal(), rng.normal()};
    ASSERT_EQ(s1.posterior(x), s1b.posterior(x));
  }
}

TEST(TwoStep, SeparableScenarioLearnsBoundary) {
  const ApuDataset data =
      apu::make_scenario(ScenarioName::separable, 600, 600, 600, 1500, 7);
  const StepConfig cfg = linear_cfg(2, 100, 0.05);
  const apu::MethodResult wuu =
      apu::two_step(data, Step2::wuu, WeightingScheme::soft, Correction::abs,
                    0.5, cfg, cfg, 0.2, 7);
  EXPECT_LE(wuu.test_error, 0.05);
  ASSERT_TRUE(wuu.step1_labeling_error.has_value());
  EXPECT_LE(*wuu.step1_labeling_error, 0.05);

  const apu::MethodResult apnu =
      apu::two_step(data, Step2::apnu, WeightingScheme::soft, Correction::abs,
                    0.5, cfg, cfg, 0.2, 7);
  EXPECT_LE(apnu.test_error, 0.05);
}

// Eq. (8) uses only data that was originally unlabeled: after step #1 the
// wUU path must not touch the positive set again.
TEST(TwoStep, WuuNeverReadsPositivesAfterStep1) {
  const ApuDataset data =
      apu::make_scenario(ScenarioName::separable, 200, 200, 200, 200, 11);
  const StepConfig cfg = linear_cfg(2, 20, 0.02);
  const apu::MethodResult wuu =
      apu::two_step(data, Step2::wuu, WeightingScheme::soft, Correction::abs,
                    0.5, cfg, cfg, 0.2, 11);
  EXPECT_EQ(wuu.pos_feature_reads_after_step1, 0u);

  // aPNU does reuse P, so the same counter must move there.
  const apu::MethodResult apnu =
      apu::two_step(data, Step2::apnu, WeightingScheme::soft, Correction::abs,
                    0.5, cfg, cfg, 0.2, 11);
  EXPECT_GT(apnu.pos_feature_reads_after_step1, 0u);
}

TEST(TwoStep, DeterministicPerSeed) {
  const ApuDataset data =
      apu::make_scenario(ScenarioName::separable, 120, 120, 120, 200, 13);
  const StepConfig cfg = linear_cfg(2, 15, 0.02);
  const apu::MethodResult a =
      apu::two_step(data, Step2::apnu, WeightingScheme::top_k, Correction::abs,
                    0.5, cfg, cfg, 0.2, 13);
  const apu::MethodResult b =
      apu::two_step(data, Step2::apnu, WeightingScheme::top_k, Correction::abs,
                    0.5, cfg, cfg, 0.2, 13);
  EXPECT_EQ(a.test_error, b.test_error);
  ASSERT_EQ(a.model.values.size(), b.model.values.size());
  for (std::size_t j = 0; j < a.model.values.size(); ++j) {
    EXPECT_EQ(a.model.values[j], b.model.values[j]);
  }
}

TEST(PurrPipeline, SeparableScenarioLearnsBoundary) {
  const ApuDataset data =
      apu::make_scenario(ScenarioName::separable, 600, 600, 600, 1500, 17);
  const StepConfig cfg = linear_cfg(2, 80, 0.02);
  const apu::MethodResult res =
      apu::purr_pipeline(data, Correction::abs, cfg, 0.2, 17);
  EXPECT_LE(res.test_error, 0.05);
  EXPECT_FALSE(res.step1_report.has_value());

  const apu::MethodResult nn_res =
      apu::purr_pipeline(data, Correction::nn, cfg, 0.2, 17);
  EXPECT_LE(nn_res.test_error, 0.06);
}

TEST(NnpuStar, CompositePriorArithmetic) {
  const ApuDataset data =
      apu::make_scenario(ScenarioName::separable, 10, 300, 100, 10, 19);
  // priors are 0.5/0.5 so the composite is 0.5 regardless of sizes.
  EXPECT_NEAR(apu::composite_prior(data), 0.5, 1e-12);

  std::vector<Example> utr_ex;
  std::vector<Example> ute_ex;
  for (int i = 0; i < 300; ++i) {
    utr_ex.emplace_back(std::vector<double>{0.0});
  }
  for (int i = 0; i < 100; ++i) {
    ute_ex.emplace_back(std::vector<double>{0.0});
  }
  const ApuDataset mixed{
      simple_points({0.0}, Role::positive),
      SampleSet(Role::unlabeled_train, std::move(utr_ex)),
      SampleSet(Role::unlabeled_test, std::move(ute_ex)),
      simple_points({0.0}, Role::eval),
      apu::PriorPair(0.2, 0.6)};
  EXPECT_NEAR(apu::composite_prior(mixed),
              (300.0 * 0.2 + 100.0 * 0.6) / 400.0, 1e-12);
}

TEST(NnpuStar, SameLikeGeometryDefeatsIt) {
  const ApuDataset data =
      apu::make_scenario(ScenarioName::samelike, 500, 500, 500, 1500, 23);
  const StepConfig cfg = linear_cfg(2, 60, 0.02);
  const apu::NnpuStarResult star = apu::nnpu_star(data, cfg, 0.2, 23);
  // Labeled positives are statistically negatives here; both nnPU runs learn
  // an inverted or degenerate boundary.
  EXPECT_GE(star.on_test_unlabeled.test_error, 0.40);
  EXPECT_GE(star.on_pooled.test_error, 0.40);
}

TEST(PnTe, ReferenceCeilingOnSeparable) {
  const ApuDataset data =
      apu::make_scenario(ScenarioName::separable, 100, 100, 600, 1500, 29);
  const StepConfig cfg = linear_cfg(2, 60, 0.05);
  const apu::MethodResult res = apu::pn_te_pipeline(data, cfg, 0.2, 29);
  EXPECT_LE(res.test_error, 0.05);
}

TEST(AccessAudit, TrainingPipelinesNeverReadTrueLabelsOutsideEval) {
  const ApuDataset data =
      apu::make_scenario(ScenarioName::separable, 120, 120, 120, 150, 37);
  const StepConfig cfg = linear_cfg(2, 10, 0.02);

  // Oracle-label reads happen in exactly two sanctioned places here:
  // step-1 labeling error (on U_tr) and misclassification (on eval).
  const std::uint64_t before = apu::true_label_read_count().load();
  const apu::MethodResult res =
      apu::two_step(data, Step2::wuu, WeightingScheme::soft, Correction::abs,
                    0.5, cfg, cfg, 0.2, 37);
  (void)res;
  const std::uint64_t delta = apu::true_label_read_count().load() - before;
  EXPECT_EQ(delta, data.unl_train.size() + data.eval.size());
}

}  // namespace
