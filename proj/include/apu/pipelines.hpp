#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "apu/data.hpp"
#include "apu/erm.hpp"
#include "apu/errors.hpp"
#include "apu/losses.hpp"
#include "apu/model.hpp"
#include "apu/risk.hpp"
#include "apu/synth.hpp"

namespace apu {

enum class WeightingScheme { soft, hard, top_k };
enum class Correction { abs, nn };
enum class Step2 { wuu, apnu };

inline const char* weighting_name(WeightingScheme s) {
  switch (s) {
    case WeightingScheme::soft: return "soft";
    case WeightingScheme::hard: return "hard";
    case WeightingScheme::top_k: return "top_k";
  }
  return "?";
}

/// Estimated negative posterior, g_sigma: X -> [0, 1].
using PosteriorFn = std::function<double(std::span<const double>)>;

/// Unlabeled-train examples carrying estimated negative-posterior weights.
class SurrogateNegativeSet {
 public:
  SurrogateNegativeSet(DataView source, std::vector<double> weights)
      : source_(std::move(source)), weights_(std::move(weights)) {
    if (weights_.size() != source_.size()) {
      throw DataError("surrogate weights must match the source set size");
    }
    for (const double w : weights_) {
      if (!(w >= 0.0 && w <= 1.0)) {
        throw DataError("surrogate weights must lie in [0, 1]");
      }
    }
  }

  std::size_t size() const { return source_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  const DataView& source() const { return source_; }
  WeightedView weighted_view() const { return WeightedView(source_, weights_); }

 private:
  DataView source_;
  std::vector<double> weights_;
};

/// Model shape plus optimization settings for one training stage.
struct StepConfig {
  ModelShape shape;
  TrainConfig train;
  LossKind loss = LossKind::sigmoid;
};

struct MethodResult {
  ParamSnapshot model;
  std::optional<TrainReport> step1_report;
  TrainReport report;
  std::optional<double> step1_labeling_error;
  double test_error = 0.0;
  // Feature reads of the labeled-positive set after step #1 finished;
  // 0 proves the wUU path never revisits P (access audit).
  std::uint64_t pos_feature_reads_after_step1 = 0;
};

/// Fraction with predict_sign(g, x) != oracle label.
inline double misclassification_rate(const Model& model,
                                     const SampleSet& eval_set) {
  if (eval_set.empty()) throw DataError("empty evaluation set");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < eval_set.size(); ++i) {
    const Example& e = eval_set.example(i);
    const std::optional<int> y = e.true_label();
    if (!y) throw DataError("evaluation example is missing its oracle label");
    if (model.predict_sign(e.features()) != *y) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(eval_set.size());
}

/// Transductive labeling error of the estimated posterior on the unlabeled
/// training set: threshold g_sigma at 0.5 and compare to oracle labels.
inline double step1_labeling_error(const SampleSet& utr,
                                   const PosteriorFn& posterior) {
  if (utr.empty()) throw DataError("empty unlabeled-train set");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < utr.size(); ++i) {
    const Example& e = utr.example(i);
    const std::optional<int> y = e.true_label();
    if (!y) throw DataError("oracle labels required for step-1 error");
    const int predicted = posterior(e.features()) >= 0.5 ? -1 : 1;
    if (predicted != *y) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(utr.size());
}

/// g_sigma(x) := sigmoid(-g(x)); trained as a positive scorer, read as a
/// negative posterior.
inline PosteriorFn make_negative_posterior(const Model& model) {
  auto frozen = std::make_shared<const Model>(Model::from_snapshot(model.snapshot()));
  return [frozen](std::span<const double> x) {
    return sigmoid_fn(-frozen->forward(x));
  };
}

namespace detail {

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose) {
  return Rng(seed).fork(purpose).next_u64();
}

/// Deterministic view split mirroring split_train_valid, without copying
/// examples (keeps the access audit attached to the parent set).
inline std::pair<DataView, DataView> split_view(const SampleSet& set,
                                                double fraction,
                                                std::uint64_t seed) {
  const std::size_t n = set.size();
  if (n < 5) throw DataError("set too small to split");
  const auto n_valid = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(n)));
  if (n_valid == 0 || n_valid >= n) {
    throw DataError("set too small to yield a nonempty validation split");
  }
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = Rng(seed).fork("train-valid-split");
  rng.shuffle(perm);
  std::vector<std::uint32_t> valid(perm.begin(),
                                   perm.begin() + static_cast<long>(n_valid));
  std::vector<std::uint32_t> train(perm.begin() + static_cast<long>(n_valid),
                                   perm.end());
  return {DataView(set, std::move(train)), DataView(set, std::move(valid))};
}

struct SplitViews {
  DataView pos_tr, pos_va;
  DataView utr_tr, utr_va;
  DataView ute_tr, ute_va;
};

inline SplitViews split_dataset(const ApuDataset& data, double fraction,
                                std::uint64_t seed) {
  SplitViews s;
  std::tie(s.pos_tr, s.pos_va) =
      split_view(data.pos, fraction, derive_seed(seed, "split-pos"));
  std::tie(s.utr_tr, s.utr_va) =
      split_view(data.unl_train, fraction, derive_seed(seed, "split-utr"));
  std::tie(s.ute_tr, s.ute_va) =
      split_view(data.unl_test, fraction, derive_seed(seed, "split-ute"));
  return s;
}

inline SurrogateNegativeSet build_surrogate_view(const DataView& utr,
                                                 const PosteriorFn& posterior,
                                                 WeightingScheme scheme,
                                                 double prior_tr) {
  if (!(prior_tr >= 0.0 && prior_tr < 1.0)) {
    throw DataError("surrogate construction needs pi_tr in [0, 1)");
  }
  const std::size_t n = utr.size();
  std::vector<double> post(n);
  for (std::size_t i = 0; i < n; ++i) post[i] = posterior(utr.features(i));

  std::vector<double> w(n, 0.0);
  switch (scheme) {
    case WeightingScheme::soft:
      w = post;
      break;
    case WeightingScheme::hard:
      for (std::size_t i = 0; i < n; ++i) {
        w[i] = std::floor(post[i] + 0.5);  // half rounds up
      }
      break;
    case WeightingScheme::top_k: {
      // Weight 1 on the round((1 - pi_tr) n) examples most confidently
      // negative; ties broken by ascending index.
      const auto k = static_cast<std::size_t>(
          std::llround((1.0 - prior_tr) * static_cast<double>(n)));
      std::vector<std::uint32_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&post](std::uint32_t a, std::uint32_t b) {
                         return post[a] > post[b];
                       });
      for (std::size_t r = 0; r < std::min(k, n); ++r) w[order[r]] = 1.0;
      break;
    }
  }
  return SurrogateNegativeSet(utr, std::move(w));
}

}  // namespace detail

/// Alg. 1 line 2: turn the unlabeled training set into a surrogate negative
/// set under the chosen weighting scheme.
inline SurrogateNegativeSet build_surrogate(const SampleSet& utr,
                                            const PosteriorFn& posterior,
                                            WeightingScheme scheme,
                                            double prior_tr) {
  return detail::build_surrogate_view(DataView(utr), posterior, scheme,
                                      prior_tr);
}

/// Hard in-or-out negative set: keep x_i iff Bernoulli(g_sigma(x_i)) fires.
/// The result is a SCAR sample of the negative class-conditional, intended
/// as input to downstream mixture-proportion estimators (not implemented
/// here).
inline SampleSet build_hard_negative_set(const SampleSet& utr,
                                         const PosteriorFn& posterior,
                                         std::uint64_t seed) {
  Rng rng = Rng(seed).fork("hard-negative-set");
  std::vector<Example> kept;
  for (std::size_t i = 0; i < utr.size(); ++i) {
    const double q = posterior(utr.example(i).features());
    if (!(q >= 0.0 && q <= 1.0)) {
      throw DataError("posterior outside [0, 1]");
    }
    if (rng.bernoulli(q)) kept.push_back(utr.example(i));
  }
  return SampleSet(utr.role(), std::move(kept));
}

struct Step1Result {
  Model model;
  TrainReport report;
  PosteriorFn posterior;
};

/// Alg. 1 line 1: probabilistic PU classifier on (P, U_tr), absPU risk with
/// logistic loss; the negative posterior is the sigmoid of the negated score.
inline Step1Result train_step1_probabilistic(const DataView& pos_tr,
                                             const DataView& utr_tr,
                                             const DataView& pos_va,
                                             const DataView& utr_va,
                                             double prior_tr,
                                             const StepConfig& cfg,
                                             std::uint64_t seed) {
  RiskSpec spec{Estimator::abspu, PriorPair(prior_tr, prior_tr),
                LossKind::logistic, std::nullopt};
  Rng init_rng = Rng(detail::derive_seed(seed, "step1-init"));
  Model model = Model::init_random(cfg.shape, init_rng);
  RiskInputs train;
  train.pos = pos_tr;
  train.unl_train = utr_tr;
  RiskInputs valid;
  valid.pos = pos_va;
  valid.unl_train = utr_va;
  TrainConfig tc = cfg.train;
  tc.seed = detail::derive_seed(seed, "step1-train");
  TrainReport report = train_standard(model, spec, train, valid, tc);
  PosteriorFn posterior = make_negative_posterior(model);
  return Step1Result{std::move(model), std::move(report), std::move(posterior)};
}

/// Two-step aPU learning: PU step #1 on (P, U_tr), surrogate construction,
/// then wUU or aPNU ERM against U_te.  Step #2 defaults to the
/// absolute-value-corrected estimators; Correction::nn switches to the
/// max-corrected forms with the defitting loop.
inline MethodResult two_step(const ApuDataset& data, Step2 step2,
                             WeightingScheme scheme, Correction corr,
                             double rho, const StepConfig& step1_cfg,
                             const StepConfig& step2_cfg,
                             double validation_fraction, std::uint64_t seed) {
  const detail::SplitViews sv =
      detail::split_dataset(data, validation_fraction, seed);

  Step1Result s1 =
      train_step1_probabilistic(sv.pos_tr, sv.utr_tr, sv.pos_va, sv.utr_va,
                                data.priors.train, step1_cfg, seed);
  const double s1_error = step1_labeling_error(data.unl_train, s1.posterior);

  const SurrogateNegativeSet sns_tr = detail::build_surrogate_view(
      sv.utr_tr, s1.posterior, scheme, data.priors.train);
  const SurrogateNegativeSet sns_va = detail::build_surrogate_view(
      sv.utr_va, s1.posterior, scheme, data.priors.train);

  const std::uint64_t pos_reads_mark = data.pos.feature_reads();

  const bool use_nn = corr == Correction::nn;
  RiskSpec spec;
  spec.priors = data.priors;
  spec.loss = step2_cfg.loss;
  if (step2 == Step2::wuu) {
    spec.estimator = use_nn ? Estimator::nn_wuu : Estimator::wuu;
  } else {
    spec.estimator = use_nn ? Estimator::nn_apnu : Estimator::apnu;
    spec.rho = rho;
  }

  RiskInputs train;
  train.surrogate = sns_tr.weighted_view();
  train.unl_test = sv.ute_tr;
  RiskInputs valid;
  valid.surrogate = sns_va.weighted_view();
  valid.unl_test = sv.ute_va;
  if (step2 == Step2::apnu) {
    train.pos = sv.pos_tr;
    valid.pos = sv.pos_va;
  }

  Rng init_rng = Rng(detail::derive_seed(seed, "model-init"));
  Model model = Model::init_random(step2_cfg.shape, init_rng);
  TrainConfig tc = step2_cfg.train;
  tc.seed = detail::derive_seed(seed, "step2-train");
  TrainReport report =
      use_nn ? train_nn_twostep(model, spec, train, valid, tc)
             : train_standard(model, spec, train, valid, tc);

  MethodResult result;
  result.model = model.snapshot();
  result.step1_report = std::move(s1.report);
  result.report = std::move(report);
  result.step1_labeling_error = s1_error;
  result.test_error = misclassification_rate(model, data.eval);
  result.pos_feature_reads_after_step1 =
      data.pos.feature_reads() - pos_reads_mark;
  return result;
}

/// Single-stage PURR training (abs correction by default; Correction::nn
/// runs the four-gradient defitting procedure).
inline MethodResult purr_pipeline(const ApuDataset& data, Correction corr,
                                  const StepConfig& cfg,
                                  double validation_fraction,
                                  std::uint64_t seed) {
  const detail::SplitViews sv =
      detail::split_dataset(data, validation_fraction, seed);
  RiskSpec spec;
  spec.estimator = corr == Correction::nn ? Estimator::nn_purr : Estimator::purr;
  spec.priors = data.priors;
  spec.loss = cfg.loss;

  RiskInputs train;
  train.pos = sv.pos_tr;
  train.unl_train = sv.utr_tr;
  train.unl_test = sv.ute_tr;
  RiskInputs valid;
  valid.pos = sv.pos_va;
  valid.unl_train = sv.utr_va;
  valid.unl_test = sv.ute_va;

  Rng init_rng = Rng(detail::derive_seed(seed, "model-init"));
  Model model = Model::init_random(cfg.shape, init_rng);
  TrainConfig tc = cfg.train;
  tc.seed = detail::derive_seed(seed, "purr-train");
  TrainReport report =
      corr == Correction::nn
          ? train_nn_purr(model, spec, train, valid, tc)
          : train_standard(model, spec, train, valid, tc);

  MethodResult result;
  result.model = model.snapshot();
  result.report = std::move(report);
  result.test_error = misclassification_rate(model, data.eval);
  return result;
}

struct NnpuStarResult {
  MethodResult on_test_unlabeled;  // nnPU over (P, U_te) with pi_te
  MethodResult on_pooled;          // nnPU over (P, U_tr u U_te), composite prior
};

inline double composite_prior(const ApuDataset& data) {
  const double n_tr = static_cast<double>(data.unl_train.size());
  const double n_te = static_cast<double>(data.unl_test.size());
  return (n_tr * data.priors.train + n_te * data.priors.test) / (n_tr + n_te);
}

namespace detail {

inline MethodResult run_nnpu(const SampleSet& pos, const SampleSet& unl,
                             double prior, const SampleSet& eval_set,
                             const StepConfig& cfg, double validation_fraction,
                             std::uint64_t seed, std::string_view tag) {
  const auto [pos_tr, pos_va] =
      split_view(pos, validation_fraction, derive_seed(seed, "split-pos"));
  const auto [unl_tr, unl_va] = split_view(
      unl, validation_fraction,
      derive_seed(seed, std::string("split-unl-") + std::string(tag)));

  RiskSpec spec{Estimator::nnpu, PriorPair(prior, prior), cfg.loss,
                std::nullopt};
  RiskInputs train;
  train.pos = pos_tr;
  train.unl_train = unl_tr;
  RiskInputs valid;
  valid.pos = pos_va;
  valid.unl_train = unl_va;

  Rng init_rng = Rng(derive_seed(seed, "model-init"));
  Model model = Model::init_random(cfg.shape, init_rng);
  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(seed, std::string("nnpu-train-") + std::string(tag));
  TrainReport report = train_nn_twostep(model, spec, train, valid, tc);

  MethodResult result;
  result.model = model.snapshot();
  result.report = std::move(report);
  result.test_error = misclassification_rate(model, eval_set);
  return result;
}

}  // namespace detail

/// nnPU* baseline: ordinary nnPU trained once against U_te and once against
/// the pooled unlabeled data with the composite prior.  Both runs are
/// returned; the harness picks the better mean performer across seeds.
inline NnpuStarResult nnpu_star(const ApuDataset& data, const StepConfig& cfg,
                                double validation_fraction,
                                std::uint64_t seed) {
  NnpuStarResult out{
      detail::run_nnpu(data.pos, data.unl_test, data.priors.test, data.eval,
                       cfg, validation_fraction, seed, "te"),
      MethodResult{}};

  std::vector<Example> pooled;
  pooled.reserve(data.unl_train.size() + data.unl_test.size());
  for (std::size_t i = 0; i < data.unl_train.size(); ++i) {
    pooled.push_back(data.unl_train.example(i));
  }
  for (std::size_t i = 0; i < data.unl_test.size(); ++i) {
    pooled.push_back(data.unl_test.example(i));
  }
  SampleSet pooled_set(Role::unlabeled_train, std::move(pooled));
  out.on_pooled =
      detail::run_nnpu(data.pos, pooled_set, composite_prior(data), data.eval,
                       cfg, validation_fraction, seed, "pooled");
  return out;
}

/// PN reference ceiling: supervised training on the oracle-labeled
/// unlabeled-test set.  This is the one pipeline that legitimately consumes
/// oracle labels outside evaluation.
inline MethodResult pn_te_pipeline(const ApuDataset& data,
                                   const StepConfig& cfg,
                                   double validation_fraction,
                                   std::uint64_t seed) {
  std::vector<Example> pos_ex;
  std::vector<Example> neg_ex;
  for (std::size_t i = 0; i < data.unl_test.size(); ++i) {
    const Example& e = data.unl_test.example(i);
    const std::optional<int> y = e.true_label();
    if (!y) throw DataError("pn_te requires oracle labels on U_te");
    (*y == 1 ? pos_ex : neg_ex).push_back(e);
  }
  if (pos_ex.empty() || neg_ex.empty()) {
    throw DataError("pn_te needs both classes present in U_te");
  }
  const SampleSet pos_set(Role::positive, std::move(pos_ex));
  const SampleSet neg_set(Role::eval, std::move(neg_ex));

  const auto [pos_tr, pos_va] = detail::split_view(
      pos_set, validation_fraction, detail::derive_seed(seed, "split-pos"));
  const auto [neg_tr, neg_va] = detail::split_view(
      neg_set, validation_fraction, detail::derive_seed(seed, "split-neg"));

  RiskSpec spec{Estimator::pn,
                PriorPair(data.priors.test, data.priors.test), cfg.loss,
                std::nullopt};
  RiskInputs train;
  train.pos = pos_tr;
  train.neg = neg_tr;
  RiskInputs valid;
  valid.pos = pos_va;
  valid.neg = neg_va;

  Rng init_rng = Rng(detail::derive_seed(seed, "model-init"));
  Model model = Model::init_random(cfg.shape, init_rng);
  TrainConfig tc = cfg.train;
  tc.seed = detail::derive_seed(seed, "pn-train");
  TrainReport report = train_standard(model, spec, train, valid, tc);

  MethodResult result;
  result.model = model.snapshot();
  result.report = std::move(report);
  result.test_error = misclassification_rate(model, data.eval);
  return result;
}

}  // namespace apu
