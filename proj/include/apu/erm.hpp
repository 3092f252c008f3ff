#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "apu/errors.hpp"
#include "apu/model.hpp"
#include "apu/optimizer.hpp"
#include "apu/risk.hpp"
#include "apu/rng.hpp"

namespace apu {

struct TrainConfig {
  int epochs = 100;
  int batches_per_epoch = 1;
  double eta = 1e-2;
  double lambda = 0.0;
  double gamma = 1.0;  // defit attenuation, nn variants only
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batches_per_epoch < 1) {
      throw std::invalid_argument("batches_per_epoch must be >= 1");
    }
    if (!(gamma > 0.0 && gamma <= 1.0)) {
      throw std::invalid_argument("gamma must lie in (0, 1]");
    }
  }
};

/// Which of the candidate gradients a batch update applied.
enum class StepKind {
  full,           // gradient of the full (corrected) risk
  defit_inner,    // negated inner-term gradient (nnPU / nn-wUU / nn-aPNU)
  defit_ten_neg,  // negated gradient of R_te-n(-)
  defit_ten_pos,  // negated gradient of R_te-n(+)
  defit_tep_pos,  // negated gradient of R_te-p(+)
};

inline const char* step_kind_name(StepKind k) {
  switch (k) {
    case StepKind::full: return "full";
    case StepKind::defit_inner: return "defit_inner";
    case StepKind::defit_ten_neg: return "defit_ten_neg";
    case StepKind::defit_ten_pos: return "defit_ten_pos";
    case StepKind::defit_tep_pos: return "defit_tep_pos";
  }
  return "?";
}

struct BatchEvent {
  int epoch;
  int batch;
  StepKind kind;
  const RiskBreakdown* breakdown;  // values at decision time, batch-local
};

using BatchHook = std::function<void(const BatchEvent&)>;

struct TrainReport {
  int best_epoch = -1;
  double best_validation_risk = std::numeric_limits<double>::infinity();
  std::vector<double> train_risk_trace;
  std::vector<double> validation_risk_trace;
  std::vector<int> defit_count_trace;  // per epoch
  ParamSnapshot best_params;
  std::int64_t defit_steps = 0;
  std::int64_t normal_steps = 0;
  std::int64_t sign_branch_evals = 0;  // 0 for the standard (abs) loop
};

/// Per-epoch trace as CSV: epoch,train_risk,valid_risk,defit_count.
inline void write_trace_csv(const TrainReport& report, std::ostream& os) {
  os << "epoch,train_risk,valid_risk,defit_count\n";
  for (std::size_t e = 0; e < report.train_risk_trace.size(); ++e) {
    os << e << ',' << report.train_risk_trace[e] << ','
       << report.validation_risk_trace[e] << ',' << report.defit_count_trace[e]
       << '\n';
  }
}

inline double validation_risk(const Model& model, const RiskSpec& spec,
                              const RiskInputs& valid) {
  return risk_value(spec, model, valid);
}

namespace detail {

inline DataView shuffled_view(const DataView& v, Rng rng) {
  std::vector<std::uint32_t> idx(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) idx[i] = v.index(i);
  rng.shuffle(idx);
  return DataView(*v.set(), std::move(idx));
}

inline WeightedView shuffled_view(const WeightedView& v, Rng rng) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<std::uint32_t> idx(v.size());
  std::vector<double> w(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    idx[k] = v.view().index(order[k]);
    w[k] = v.weight(order[k]);
  }
  return WeightedView(DataView(*v.view().set(), std::move(idx)), std::move(w));
}

inline RiskInputs shuffle_epoch(const RiskInputs& in, const Rng& epoch_rng) {
  RiskInputs out;
  if (!in.pos.empty()) out.pos = shuffled_view(in.pos, epoch_rng.fork("pos"));
  if (!in.neg.empty()) out.neg = shuffled_view(in.neg, epoch_rng.fork("neg"));
  if (!in.unl_train.empty()) {
    out.unl_train = shuffled_view(in.unl_train, epoch_rng.fork("utr"));
  }
  if (!in.unl_test.empty()) {
    out.unl_test = shuffled_view(in.unl_test, epoch_rng.fork("ute"));
  }
  if (!in.surrogate.empty()) {
    out.surrogate = shuffled_view(in.surrogate, epoch_rng.fork("sur"));
  }
  return out;
}

inline std::size_t min_constituent_size(const RiskInputs& in) {
  std::size_t m = std::numeric_limits<std::size_t>::max();
  auto consider = [&m](std::size_t n) {
    if (n > 0) m = std::min(m, n);
  };
  consider(in.pos.size());
  consider(in.neg.size());
  consider(in.unl_train.size());
  consider(in.unl_test.size());
  consider(in.surrogate.size());
  if (m == std::numeric_limits<std::size_t>::max()) {
    throw DataError("training inputs are empty");
  }
  return m;
}

/// Proportional slice [floor(b n/N), floor((b+1) n/N)) of every constituent
/// set; batch sizes differ by at most one and no batch is ever empty while
/// N <= min set size.
inline RiskInputs batch_slice(const RiskInputs& shuffled, std::size_t b,
                              std::size_t n_batches) {
  auto cut = [&](std::size_t n, std::size_t k) { return n * k / n_batches; };
  RiskInputs out;
  if (!shuffled.pos.empty()) {
    out.pos = shuffled.pos.slice(cut(shuffled.pos.size(), b),
                                 cut(shuffled.pos.size(), b + 1));
  }
  if (!shuffled.neg.empty()) {
    out.neg = shuffled.neg.slice(cut(shuffled.neg.size(), b),
                                 cut(shuffled.neg.size(), b + 1));
  }
  if (!shuffled.unl_train.empty()) {
    out.unl_train = shuffled.unl_train.slice(
        cut(shuffled.unl_train.size(), b), cut(shuffled.unl_train.size(), b + 1));
  }
  if (!shuffled.unl_test.empty()) {
    out.unl_test = shuffled.unl_test.slice(cut(shuffled.unl_test.size(), b),
                                           cut(shuffled.unl_test.size(), b + 1));
  }
  if (!shuffled.surrogate.empty()) {
    out.surrogate = shuffled.surrogate.slice(
        cut(shuffled.surrogate.size(), b), cut(shuffled.surrogate.size(), b + 1));
  }
  return out;
}

struct EpochBookkeeping {
  TrainReport* report;
  const RiskSpec* spec;
  const Model* model;
  const RiskInputs* train;
  const RiskInputs* valid;

  void close_epoch(int epoch, int defits) {
    const double train_risk = risk_value(*spec, *model, *train);
    const double valid_risk = risk_value(*spec, *model, *valid);
    if (!std::isfinite(train_risk) || !std::isfinite(valid_risk)) {
      throw TrainingDiverged(
          std::string("non-finite ") + estimator_name(spec->estimator) +
          " risk after epoch " + std::to_string(epoch) +
          " (train=" + std::to_string(train_risk) +
          ", valid=" + std::to_string(valid_risk) + ")");
    }
    report->train_risk_trace.push_back(train_risk);
    report->validation_risk_trace.push_back(valid_risk);
    report->defit_count_trace.push_back(defits);
    if (valid_risk < report->best_validation_risk) {
      report->best_validation_risk = valid_risk;
      report->best_epoch = epoch;
      report->best_params = model->snapshot();
    }
  }
};

}  // namespace detail

/// Standard mini-batch ERM for the smooth and absolute-value-corrected
/// estimators.  The loop body is a single code path: it never inspects the
/// sign of any risk term (sign_branch_evals stays 0).  Returns the
/// parameters of the epoch with the lowest validation risk; the model is
/// left restored to them.
inline TrainReport train_standard(Model& model, const RiskSpec& spec,
                                  const RiskInputs& train,
                                  const RiskInputs& valid,
                                  const TrainConfig& cfg,
                                  const BatchHook& hook = {}) {
  spec.validate();
  cfg.validate();
  if (is_nn_variant(spec.estimator)) {
    throw std::invalid_argument(
        "train_standard handles abs/smooth estimators; use the defitting "
        "loops for nn variants");
  }
  AdamW opt(model.param_count(), cfg.eta, cfg.lambda);
  TrainReport report;
  detail::EpochBookkeeping book{&report, &spec, &model, &train, &valid};
  const Rng run_rng = Rng(cfg.seed).fork("erm-shuffle");
  const std::size_t n_batches = std::min<std::size_t>(
      static_cast<std::size_t>(cfg.batches_per_epoch),
      detail::min_constituent_size(train));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const RiskInputs shuffled =
        detail::shuffle_epoch(train, run_rng.fork(static_cast<std::uint64_t>(epoch)));
    for (std::size_t b = 0; b < n_batches; ++b) {
      const RiskInputs batch = detail::batch_slice(shuffled, b, n_batches);
      RiskBreakdown bd;
      const std::vector<double> grad = risk_gradient(spec, model, batch, &bd);
      if (hook) {
        hook(BatchEvent{epoch, static_cast<int>(b), StepKind::full, &bd});
      }
      opt.step(model.params(), grad);
      ++report.normal_steps;
    }
    book.close_epoch(epoch, 0);
  }
  model.restore(report.best_params);
  return report;
}

/// Defitting ERM for the single-correction nn estimators (nnPU, nn-wUU,
/// nn-aPNU).  Whenever the batch's decomposed inner term goes negative, the
/// update steps along the negated inner-term gradient at the attenuated rate
/// gamma * eta; otherwise it is a plain step on the corrected risk.
inline TrainReport train_nn_twostep(Model& model, const RiskSpec& spec,
                                    const RiskInputs& train,
                                    const RiskInputs& valid,
                                    const TrainConfig& cfg,
                                    const BatchHook& hook = {}) {
  spec.validate();
  cfg.validate();
  const char* inner_name = nullptr;
  InnerTerm inner_term{};
  switch (spec.estimator) {
    case Estimator::nnpu:
      inner_name = "inner_pre";
      inner_term = InnerTerm::pu_inner;
      break;
    case Estimator::nn_wuu:
    case Estimator::nn_apnu:
      inner_name = "pos_inner_pre";
      inner_term = InnerTerm::pos_inner;
      break;
    default:
      throw std::invalid_argument(
          "train_nn_twostep expects nnpu, nn_wuu or nn_apnu");
  }

  AdamW opt(model.param_count(), cfg.eta, cfg.lambda);
  TrainReport report;
  detail::EpochBookkeeping book{&report, &spec, &model, &train, &valid};
  const Rng run_rng = Rng(cfg.seed).fork("erm-shuffle");
  const std::size_t n_batches = std::min<std::size_t>(
      static_cast<std::size_t>(cfg.batches_per_epoch),
      detail::min_constituent_size(train));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const RiskInputs shuffled =
        detail::shuffle_epoch(train, run_rng.fork(static_cast<std::uint64_t>(epoch)));
    int defits = 0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const RiskInputs batch = detail::batch_slice(shuffled, b, n_batches);
      const RiskEval eval = risk_eval(spec, model, batch);
      ++report.sign_branch_evals;
      if (eval.breakdown.term(inner_name) < 0.0) {
        if (hook) {
          hook(BatchEvent{epoch, static_cast<int>(b), StepKind::defit_inner,
                          &eval.breakdown});
        }
        std::vector<double> grad =
            inner_term_gradient(spec, model, batch, inner_term);
        for (double& g : grad) g = -g;
        opt.step(model.params(), grad, cfg.gamma);
        ++report.defit_steps;
        ++defits;
      } else {
        if (hook) {
          hook(BatchEvent{epoch, static_cast<int>(b), StepKind::full,
                          &eval.breakdown});
        }
        const std::vector<double> grad = risk_gradient(spec, model, batch);
        opt.step(model.params(), grad);
        ++report.normal_steps;
      }
    }
    book.close_epoch(epoch, defits);
  }
  model.restore(report.best_params);
  return report;
}

/// Defitting ERM for nn-PURR.  Exactly one of four candidate gradients is
/// applied per batch; the implausibility checks run in fixed priority order
/// R_te-n(-) < 0, then R_te-n(+) < 0, then R_te-p(+) < 0, else the full
/// nn-PURR gradient.
inline TrainReport train_nn_purr(Model& model, const RiskSpec& spec,
                                 const RiskInputs& train,
                                 const RiskInputs& valid,
                                 const TrainConfig& cfg,
                                 const BatchHook& hook = {}) {
  spec.validate();
  cfg.validate();
  if (spec.estimator != Estimator::nn_purr) {
    throw std::invalid_argument("train_nn_purr expects the nn_purr estimator");
  }
  AdamW opt(model.param_count(), cfg.eta, cfg.lambda);
  TrainReport report;
  detail::EpochBookkeeping book{&report, &spec, &model, &train, &valid};
  const Rng run_rng = Rng(cfg.seed).fork("erm-shuffle");
  const std::size_t n_batches = std::min<std::size_t>(
      static_cast<std::size_t>(cfg.batches_per_epoch),
      detail::min_constituent_size(train));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const RiskInputs shuffled =
        detail::shuffle_epoch(train, run_rng.fork(static_cast<std::uint64_t>(epoch)));
    int defits = 0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const RiskInputs batch = detail::batch_slice(shuffled, b, n_batches);
      const RiskEval eval = risk_eval(spec, model, batch);
      ++report.sign_branch_evals;

      StepKind kind = StepKind::full;
      if (eval.breakdown.term("ten_neg_pre") < 0.0) {
        kind = StepKind::defit_ten_neg;
      } else if (eval.breakdown.term("ten_pos_pre") < 0.0) {
        kind = StepKind::defit_ten_pos;
      } else if (eval.breakdown.term("tep_pos_pre") < 0.0) {
        kind = StepKind::defit_tep_pos;
      }
      if (hook) {
        hook(BatchEvent{epoch, static_cast<int>(b), kind, &eval.breakdown});
      }

      if (kind == StepKind::full) {
        const std::vector<double> grad = risk_gradient(spec, model, batch);
        opt.step(model.params(), grad);
        ++report.normal_steps;
      } else {
        InnerTerm term = InnerTerm::ten_neg;
        if (kind == StepKind::defit_ten_pos) term = InnerTerm::ten_pos;
        if (kind == StepKind::defit_tep_pos) term = InnerTerm::tep_pos;
        std::vector<double> grad = inner_term_gradient(spec, model, batch, term);
        for (double& g : grad) g = -g;
        opt.step(model.params(), grad, cfg.gamma);
        ++report.defit_steps;
        ++defits;
      }
    }
    book.close_epoch(epoch, defits);
  }
  model.restore(report.best_params);
  return report;
}

}  // namespace apu
