#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "apu/data.hpp"
#include "apu/errors.hpp"
#include "apu/losses.hpp"
#include "apu/model.hpp"

namespace apu {

enum class Estimator {
  pn,
  upu,
  nnpu,
  abspu,
  nu,
  wuu,
  apnu,
  purr,
  nn_wuu,
  nn_apnu,
  nn_purr,
};

inline const char* estimator_name(Estimator e) {
  switch (e) {
    case Estimator::pn: return "pn";
    case Estimator::upu: return "upu";
    case Estimator::nnpu: return "nnpu";
    case Estimator::abspu: return "abspu";
    case Estimator::nu: return "nu";
    case Estimator::wuu: return "wuu";
    case Estimator::apnu: return "apnu";
    case Estimator::purr: return "purr";
    case Estimator::nn_wuu: return "nn_wuu";
    case Estimator::nn_apnu: return "nn_apnu";
    case Estimator::nn_purr: return "nn_purr";
  }
  return "?";
}

inline bool is_nn_variant(Estimator e) {
  return e == Estimator::nnpu || e == Estimator::nn_wuu ||
         e == Estimator::nn_apnu || e == Estimator::nn_purr;
}

struct RiskSpec {
  Estimator estimator = Estimator::abspu;
  PriorPair priors;
  LossKind loss = LossKind::sigmoid;
  std::optional<double> rho;  // aPNU mixing weight only

  void validate() const {
    const bool wants_rho =
        estimator == Estimator::apnu || estimator == Estimator::nn_apnu;
    if (wants_rho != rho.has_value()) {
      throw std::invalid_argument(
          wants_rho ? "rho is required for the aPNU estimators"
                    : "rho is only meaningful for the aPNU estimators");
    }
    if (rho && !(*rho >= 0.0 && *rho <= 1.0)) {
      throw std::invalid_argument("rho must lie in [0, 1]");
    }
  }
};

/// Named sub-terms of a risk value; total is always recomputable from them.
/// The *_pre entries hold decomposed risks before any |.| or max{0,.}
/// correction and drive both the overfitting diagnostics and the defit
/// branch decisions of the non-negativity ERM loops.
struct RiskBreakdown {
  double total = 0.0;
  std::vector<std::pair<std::string, double>> terms;

  void add(std::string name, double value) {
    terms.emplace_back(std::move(name), value);
  }
  bool has(std::string_view name) const {
    for (const auto& [k, v] : terms) {
      if (k == name) return true;
    }
    return false;
  }
  double term(std::string_view name) const {
    for (const auto& [k, v] : terms) {
      if (k == name) return v;
    }
    throw std::invalid_argument("no breakdown term named '" +
                                std::string(name) + "'");
  }
};

/// Views an estimator may draw from.  The single-distribution estimators
/// (pn, upu, nnpu, abspu, nu) treat `unl_train` as their unlabeled set and
/// read their class prior from `priors.train`.
struct RiskInputs {
  DataView pos;
  DataView neg;
  DataView unl_train;
  DataView unl_test;
  WeightedView surrogate;
};

struct RiskEval {
  double value = 0.0;
  RiskBreakdown breakdown;
};

namespace detail {

enum SetId : int { kPos = 0, kNeg, kUtr, kUte, kSur, kSetCount };

struct Contribution {
  int set;
  int yhat;
  double coeff;
};

/// Per-call evaluation state: cached scores and memoized term means.
class RiskContext {
 public:
  RiskContext(const Model& g, const RiskInputs& in, LossKind loss,
              double prior_tr)
      : g_(g), in_(in), loss_(loss), prior_tr_(prior_tr) {}

  double term(int set, int yhat) {
    auto& memo = yhat > 0 ? term_plus_[set] : term_minus_[set];
    if (!memo) {
      memo = compute_term(set, yhat);
    }
    return *memo;
  }

  const std::vector<double>& scores(int set) {
    if (!scores_[set]) {
      std::vector<double> s;
      const std::size_t n = set_size(set);
      s.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        s.push_back(g_.forward(features(set, i)));
      }
      scores_[set] = std::move(s);
    }
    return *scores_[set];
  }

  std::size_t set_size(int set) const {
    switch (set) {
      case kPos: return in_.pos.size();
      case kNeg: return in_.neg.size();
      case kUtr: return in_.unl_train.size();
      case kUte: return in_.unl_test.size();
      case kSur: return in_.surrogate.size();
    }
    return 0;
  }

  const std::vector<double>& features(int set, std::size_t i) const {
    switch (set) {
      case kPos: return in_.pos.features(i);
      case kNeg: return in_.neg.features(i);
      case kUtr: return in_.unl_train.features(i);
      case kUte: return in_.unl_test.features(i);
      default: return in_.surrogate.features(i);
    }
  }

  /// Per-example scale of set `set` inside its mean: 1/n, or w_i/(n(1-pi_tr))
  /// for the surrogate set.
  double example_scale(int set, std::size_t i) const {
    const double n = static_cast<double>(set_size(set));
    if (set == kSur) {
      return in_.surrogate.weight(i) / (n * (1.0 - prior_tr_));
    }
    return 1.0 / n;
  }

  LossKind loss() const { return loss_; }
  const Model& model() const { return g_; }

 private:
  double compute_term(int set, int yhat) {
    const std::size_t n = set_size(set);
    if (n == 0) {
      throw DataError(std::string("empty ") + set_label(set) +
                      " set passed to a risk estimator");
    }
    const std::vector<double>& s = scores(set);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += example_scale(set, i) * loss_value(loss_, s[i], yhat);
    }
    return acc;
  }

  static const char* set_label(int set) {
    switch (set) {
      case kPos: return "positive";
      case kNeg: return "negative";
      case kUtr: return "unlabeled-train";
      case kUte: return "unlabeled-test";
      case kSur: return "surrogate-negative";
    }
    return "?";
  }

  const Model& g_;
  const RiskInputs& in_;
  LossKind loss_;
  double prior_tr_;
  std::array<std::optional<std::vector<double>>, kSetCount> scores_;
  std::array<std::optional<double>, kSetCount> term_plus_;
  std::array<std::optional<double>, kSetCount> term_minus_;
};

struct Assembly {
  double total = 0.0;
  RiskBreakdown breakdown;
  std::vector<Contribution> contribs;
};

// Correction boundary rule: an inner term of exactly 0 takes the nonnegative
// branch, so sign(0) = +1 and the max{0,.} derivative at 0 is 1.
inline double abs_sign(double x) { return x >= 0.0 ? 1.0 : -1.0; }
inline double clamp_factor(double x) { return x >= 0.0 ? 1.0 : 0.0; }

inline Assembly assemble(const RiskSpec& spec, RiskContext& ctx) {
  spec.validate();
  Assembly a;
  const double pi_tr = spec.priors.train;
  const double pi_te = spec.priors.test;

  switch (spec.estimator) {
    case Estimator::pn: {
      const double pos = pi_tr * ctx.term(kPos, +1);
      const double neg = (1.0 - pi_tr) * ctx.term(kNeg, -1);
      a.total = pos + neg;
      a.breakdown.add("pos_labeled", pos);
      a.breakdown.add("neg_labeled", neg);
      a.contribs = {{kPos, +1, pi_tr}, {kNeg, -1, 1.0 - pi_tr}};
      break;
    }
    case Estimator::upu:
    case Estimator::nnpu:
    case Estimator::abspu: {
      // pi R_p(+) followed by the decomposed negative risk
      // R_u(-) - pi R_p(-), raw / clamped / reflected respectively.
      const double pi = pi_tr;
      const double pos = pi * ctx.term(kPos, +1);
      const double inner = ctx.term(kUtr, -1) - pi * ctx.term(kPos, -1);
      double corrected = inner;
      double factor = 1.0;
      if (spec.estimator == Estimator::nnpu) {
        corrected = std::max(0.0, inner);
        factor = clamp_factor(inner);
      } else if (spec.estimator == Estimator::abspu) {
        corrected = std::abs(inner);
        factor = abs_sign(inner);
      }
      a.total = pos + corrected;
      a.breakdown.add("pos_labeled", pos);
      a.breakdown.add("inner_pre", inner);
      a.breakdown.add("inner_corrected", corrected);
      a.contribs.push_back({kPos, +1, pi});
      if (factor != 0.0) {
        a.contribs.push_back({kUtr, -1, factor});
        a.contribs.push_back({kPos, -1, -factor * pi});
      }
      break;
    }
    case Estimator::nu: {
      // |R_u(+) - (1-pi) R_n(+)| + (1-pi) R_n(-)
      const double pi = pi_tr;
      const double neg = (1.0 - pi) * ctx.term(kNeg, -1);
      const double inner = ctx.term(kUtr, +1) - (1.0 - pi) * ctx.term(kNeg, +1);
      const double s = abs_sign(inner);
      a.total = std::abs(inner) + neg;
      a.breakdown.add("neg_labeled", neg);
      a.breakdown.add("pos_inner_pre", inner);
      a.breakdown.add("pos_inner_corrected", std::abs(inner));
      a.contribs = {{kUtr, +1, s},
                    {kNeg, +1, -s * (1.0 - pi)},
                    {kNeg, -1, 1.0 - pi}};
      break;
    }
    case Estimator::wuu:
    case Estimator::nn_wuu:
    case Estimator::apnu:
    case Estimator::nn_apnu: {
      const bool nn = is_nn_variant(spec.estimator);
      const bool with_pos =
          spec.estimator == Estimator::apnu || spec.estimator == Estimator::nn_apnu;
      const double rho = with_pos ? *spec.rho : 1.0;
      const double neg = (1.0 - pi_te) * ctx.term(kSur, -1);
      const double inner =
          ctx.term(kUte, +1) - (1.0 - pi_te) * ctx.term(kSur, +1);
      const double corrected = nn ? std::max(0.0, inner) : std::abs(inner);
      const double factor = nn ? clamp_factor(inner) : abs_sign(inner);
      a.total = neg + rho * corrected;
      a.breakdown.add("surrogate_neg", neg);
      a.breakdown.add("pos_inner_pre", inner);
      a.breakdown.add("pos_inner_corrected", corrected);
      if (with_pos) {
        const double pos = (1.0 - rho) * pi_te * ctx.term(kPos, +1);
        a.total += pos;
        a.breakdown.add("pos_labeled", pos);
        a.contribs.push_back({kPos, +1, (1.0 - rho) * pi_te});
      }
      a.contribs.push_back({kSur, -1, 1.0 - pi_te});
      if (factor != 0.0 && rho != 0.0) {
        a.contribs.push_back({kUte, +1, rho * factor});
        a.contribs.push_back({kSur, +1, -rho * factor * (1.0 - pi_te)});
      }
      break;
    }
    case Estimator::purr:
    case Estimator::nn_purr: {
      const bool nn = spec.estimator == Estimator::nn_purr;
      const double k = (1.0 - pi_te) / (1.0 - pi_tr);
      // R_te-n(yhat) estimated from the training distribution.
      const double ten_pos = (ctx.term(kUtr, +1) - pi_tr * ctx.term(kPos, +1)) /
                             (1.0 - pi_tr);
      const double ten_neg = (ctx.term(kUtr, -1) - pi_tr * ctx.term(kPos, -1)) /
                             (1.0 - pi_tr);
      const double ten_pos_c = nn ? std::max(0.0, ten_pos) : std::abs(ten_pos);
      const double ten_neg_c = nn ? std::max(0.0, ten_neg) : std::abs(ten_neg);
      // pi_te R_te-p(+) by NU decomposition over the corrected R_te-n(+).
      const double tep_pos = ctx.term(kUte, +1) - (1.0 - pi_te) * ten_pos_c;
      const double tep_pos_c = nn ? std::max(0.0, tep_pos) : std::abs(tep_pos);
      const double f_ten_pos = nn ? clamp_factor(ten_pos) : abs_sign(ten_pos);
      const double f_ten_neg = nn ? clamp_factor(ten_neg) : abs_sign(ten_neg);
      const double f_tep = nn ? clamp_factor(tep_pos) : abs_sign(tep_pos);

      a.total = tep_pos_c + (1.0 - pi_te) * ten_neg_c;
      a.breakdown.add("ten_pos_pre", ten_pos);
      a.breakdown.add("ten_pos_corrected", ten_pos_c);
      a.breakdown.add("ten_neg_pre", ten_neg);
      a.breakdown.add("ten_neg_corrected", ten_neg_c);
      a.breakdown.add("tep_pos_pre", tep_pos);
      a.breakdown.add("tep_pos_corrected", tep_pos_c);
      // Fully uncorrected value, for the purr >= upurr diagnostics.
      a.breakdown.add("upurr_total",
                      ctx.term(kUte, +1) - (1.0 - pi_te) * ten_pos +
                          (1.0 - pi_te) * ten_neg);

      if (f_tep != 0.0) {
        a.contribs.push_back({kUte, +1, f_tep});
        if (f_ten_pos != 0.0) {
          a.contribs.push_back({kUtr, +1, -f_tep * f_ten_pos * k});
          a.contribs.push_back({kPos, +1, f_tep * f_ten_pos * k * pi_tr});
        }
      }
      if (f_ten_neg != 0.0) {
        a.contribs.push_back({kUtr, -1, f_ten_neg * k});
        a.contribs.push_back({kPos, -1, -f_ten_neg * k * pi_tr});
      }
      break;
    }
  }
  a.breakdown.total = a.total;
  return a;
}

inline void accumulate_contributions(RiskContext& ctx,
                                     const std::vector<Contribution>& contribs,
                                     std::vector<double>& grad) {
  // Merge per-set so each example is back-propagated once.
  for (int set = 0; set < kSetCount; ++set) {
    std::vector<const Contribution*> here;
    for (const Contribution& c : contribs) {
      if (c.set == set && c.coeff != 0.0) here.push_back(&c);
    }
    if (here.empty()) continue;
    const std::vector<double>& s = ctx.scores(set);
    const std::size_t n = ctx.set_size(set);
    for (std::size_t i = 0; i < n; ++i) {
      double dscore = 0.0;
      for (const Contribution* c : here) {
        dscore += c->coeff * ctx.example_scale(set, i) *
                  loss_grad(ctx.loss(), s[i], c->yhat);
      }
      if (dscore != 0.0) {
        ctx.model().accumulate_example_gradient(ctx.features(set, i), dscore,
                                                grad);
      }
    }
  }
}

}  // namespace detail

/// Value plus term breakdown of the requested estimator.
inline RiskEval risk_eval(const RiskSpec& spec, const Model& g,
                          const RiskInputs& in) {
  detail::RiskContext ctx(g, in, spec.loss, spec.priors.train);
  detail::Assembly a = detail::assemble(spec, ctx);
  return RiskEval{a.total, std::move(a.breakdown)};
}

inline double risk_value(const RiskSpec& spec, const Model& g,
                         const RiskInputs& in) {
  return risk_eval(spec, g, in).value;
}

/// Exact gradient of the estimator value w.r.t. the model parameters.  At a
/// correction boundary (inner term exactly 0) the nonnegative branch applies.
inline std::vector<double> risk_gradient(const RiskSpec& spec, const Model& g,
                                         const RiskInputs& in,
                                         RiskBreakdown* breakdown_out = nullptr) {
  if (spec.loss == LossKind::zero_one) {
    throw std::invalid_argument("zero_one loss cannot be differentiated");
  }
  detail::RiskContext ctx(g, in, spec.loss, spec.priors.train);
  detail::Assembly a = detail::assemble(spec, ctx);
  std::vector<double> grad(g.param_count(), 0.0);
  detail::accumulate_contributions(ctx, a.contribs, grad);
  if (breakdown_out) *breakdown_out = std::move(a.breakdown);
  return grad;
}

/// Decomposed inner terms whose sign drives the defitting ERM loops.
enum class InnerTerm {
  pu_inner,   // R_u(-) - pi R_p(-)                    (nnPU)
  pos_inner,  // R_te-u(+) - (1-pi_te) R_n-u(+)        (nn-wUU / nn-aPNU)
  ten_neg,    // (R_tr-u(-) - pi_tr R_tr-p(-)) / (1-pi_tr)
  ten_pos,    // (R_tr-u(+) - pi_tr R_tr-p(+)) / (1-pi_tr)
  tep_pos,    // (R_te-u(+) - (1-pi_te) [R_te-n(+)]+) / pi_te
};

/// Gradient of one inner term (not negated; defit steps negate it).  The
/// tep_pos normalization 1/pi_te is skipped when pi_te = 0 to stay finite;
/// the sign, which decides the branch, is unaffected.
inline std::vector<double> inner_term_gradient(const RiskSpec& spec,
                                               const Model& g,
                                               const RiskInputs& in,
                                               InnerTerm which) {
  detail::RiskContext ctx(g, in, spec.loss, spec.priors.train);
  const double pi_tr = spec.priors.train;
  const double pi_te = spec.priors.test;
  std::vector<detail::Contribution> contribs;
  switch (which) {
    case InnerTerm::pu_inner:
      contribs = {{detail::kUtr, -1, 1.0}, {detail::kPos, -1, -pi_tr}};
      break;
    case InnerTerm::pos_inner:
      contribs = {{detail::kUte, +1, 1.0},
                  {detail::kSur, +1, -(1.0 - pi_te)}};
      break;
    case InnerTerm::ten_neg:
      contribs = {{detail::kUtr, -1, 1.0 / (1.0 - pi_tr)},
                  {detail::kPos, -1, -pi_tr / (1.0 - pi_tr)}};
      break;
    case InnerTerm::ten_pos:
      contribs = {{detail::kUtr, +1, 1.0 / (1.0 - pi_tr)},
                  {detail::kPos, +1, -pi_tr / (1.0 - pi_tr)}};
      break;
    case InnerTerm::tep_pos: {
      const double scale = pi_te > 0.0 ? 1.0 / pi_te : 1.0;
      const double ten_pos = (ctx.term(detail::kUtr, +1) -
                              pi_tr * ctx.term(detail::kPos, +1)) /
                             (1.0 - pi_tr);
      contribs.push_back({detail::kUte, +1, scale});
      if (ten_pos >= 0.0) {
        const double k = scale * (1.0 - pi_te) / (1.0 - pi_tr);
        contribs.push_back({detail::kUtr, +1, -k});
        contribs.push_back({detail::kPos, +1, k * pi_tr});
      }
      break;
    }
  }
  std::vector<double> grad(g.param_count(), 0.0);
  detail::accumulate_contributions(ctx, contribs, grad);
  return grad;
}

// ---------------------------------------------------------------------------
// Named estimator entry points.
// ---------------------------------------------------------------------------

/// (1/n) sum of loss(g(x), yhat) over the view.
inline double labeled_risk(const Model& g, const DataView& view, int yhat,
                           LossKind loss) {
  if (view.empty()) throw DataError("labeled risk over an empty set");
  double acc = 0.0;
  for (std::size_t i = 0; i < view.size(); ++i) {
    acc += loss_value(loss, g.forward(view.features(i)), yhat);
  }
  return acc / static_cast<double>(view.size());
}

inline double labeled_risk(const Model& g, const SampleSet& set, int yhat,
                           LossKind loss) {
  return labeled_risk(g, DataView(set), yhat, loss);
}

inline double pn_risk(const Model& g, const SampleSet& pos,
                      const SampleSet& neg, double prior, LossKind loss) {
  RiskSpec spec{Estimator::pn, PriorPair(prior, prior), loss, std::nullopt};
  RiskInputs in;
  in.pos = DataView(pos);
  in.neg = DataView(neg);
  return risk_value(spec, g, in);
}

inline double upu_risk(const Model& g, const SampleSet& pos,
                       const SampleSet& unl, double prior, LossKind loss) {
  RiskSpec spec{Estimator::upu, PriorPair(prior, prior), loss, std::nullopt};
  RiskInputs in;
  in.pos = DataView(pos);
  in.unl_train = DataView(unl);
  return risk_value(spec, g, in);
}

inline double nnpu_risk(const Model& g, const SampleSet& pos,
                        const SampleSet& unl, double prior, LossKind loss) {
  RiskSpec spec{Estimator::nnpu, PriorPair(prior, prior), loss, std::nullopt};
  RiskInputs in;
  in.pos = DataView(pos);
  in.unl_train = DataView(unl);
  return risk_value(spec, g, in);
}

inline double abspu_risk(const Model& g, const SampleSet& pos,
                         const SampleSet& unl, double prior, LossKind loss) {
  RiskSpec spec{Estimator::abspu, PriorPair(prior, prior), loss, std::nullopt};
  RiskInputs in;
  in.pos = DataView(pos);
  in.unl_train = DataView(unl);
  return risk_value(spec, g, in);
}

/// |R_u(yhat) - pi R_p(yhat)|: the absolute-value-corrected decomposed
/// labeled risk, still scaled by (1 - pi).
inline double abs_neg_risk(const Model& g, const SampleSet& pos,
                           const SampleSet& unl, double prior, LossKind loss,
                           int yhat) {
  DataView pv(pos);
  DataView uv(unl);
  return std::abs(labeled_risk(g, uv, yhat, loss) -
                  prior * labeled_risk(g, pv, yhat, loss));
}

/// R_n-u(yhat) = (1/n) sum w_i loss(g(x_i), yhat) / (1 - pi_tr).
inline double surrogate_neg_risk(const Model& g, const WeightedView& sur,
                                 double prior_tr, LossKind loss, int yhat) {
  if (!(prior_tr >= 0.0 && prior_tr < 1.0)) {
    throw DataError("surrogate risk needs pi_tr in [0, 1)");
  }
  if (sur.empty()) throw DataError("surrogate risk over an empty set");
  double acc = 0.0;
  for (std::size_t i = 0; i < sur.size(); ++i) {
    acc += sur.weight(i) * loss_value(loss, g.forward(sur.features(i)), yhat);
  }
  return acc / (static_cast<double>(sur.size()) * (1.0 - prior_tr));
}

inline double nu_risk(const Model& g, const SampleSet& neg,
                      const SampleSet& unl, double prior, LossKind loss) {
  RiskSpec spec{Estimator::nu, PriorPair(prior, prior), loss, std::nullopt};
  RiskInputs in;
  in.neg = DataView(neg);
  in.unl_train = DataView(unl);
  return risk_value(spec, g, in);
}

inline double wuu_risk(const Model& g, const WeightedView& sur,
                       const SampleSet& ute, const PriorPair& priors,
                       LossKind loss) {
  RiskSpec spec{Estimator::wuu, priors, loss, std::nullopt};
  RiskInputs in;
  in.surrogate = sur;
  in.unl_test = DataView(ute);
  return risk_value(spec, g, in);
}

inline double apnu_risk(const Model& g, const SampleSet& pos,
                        const WeightedView& sur, const SampleSet& ute,
                        const PriorPair& priors, double rho, LossKind loss) {
  RiskSpec spec{Estimator::apnu, priors, loss, rho};
  RiskInputs in;
  in.pos = DataView(pos);
  in.surrogate = sur;
  in.unl_test = DataView(ute);
  return risk_value(spec, g, in);
}

inline double purr_risk(const Model& g, const SampleSet& pos,
                        const SampleSet& utr, const SampleSet& ute,
                        const PriorPair& priors, LossKind loss) {
  RiskSpec spec{Estimator::purr, priors, loss, std::nullopt};
  RiskInputs in;
  in.pos = DataView(pos);
  in.unl_train = DataView(utr);
  in.unl_test = DataView(ute);
  return risk_value(spec, g, in);
}

}  // namespace apu
