#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "apu/data.hpp"
#include "apu/errors.hpp"
#include "apu/rng.hpp"

namespace apu {

/// Isotropic unit-variance Gaussian component.
struct GaussianComponent {
  std::vector<double> mean;
  double weight = 1.0;
};

struct Mixture {
  std::vector<GaussianComponent> components;

  std::size_t dim() const {
    return components.empty() ? 0 : components.front().mean.size();
  }

  void validate() const {
    if (components.empty()) throw DataError("mixture has no components");
    double total = 0.0;
    for (const GaussianComponent& c : components) {
      if (c.mean.size() != dim()) {
        throw DataError("mixture component dimension mismatch");
      }
      if (!(c.weight > 0.0)) throw DataError("component weight must be > 0");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw DataError("mixture weights must sum to 1");
    }
  }

  double density(std::span<const double> x) const {
    const double d = static_cast<double>(dim());
    const double norm = std::pow(2.0 * 3.14159265358979323846, -0.5 * d);
    double acc = 0.0;
    for (const GaussianComponent& c : components) {
      double sq = 0.0;
      for (std::size_t i = 0; i < c.mean.size(); ++i) {
        const double diff = x[i] - c.mean[i];
        sq += diff * diff;
      }
      acc += c.weight * norm * std::exp(-0.5 * sq);
    }
    return acc;
  }

  /// Draws one point; returns the chosen component index through `component`.
  std::vector<double> draw(Rng& rng, std::size_t* component = nullptr) const {
    double u = rng.uniform();
    std::size_t pick = components.size() - 1;
    for (std::size_t c = 0; c < components.size(); ++c) {
      if (u < components[c].weight) {
        pick = c;
        break;
      }
      u -= components[c].weight;
    }
    if (component) *component = pick;
    std::vector<double> x(dim());
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = components[pick].mean[i] + rng.normal();
    }
    return x;
  }
};

/// n i.i.d. draws; sublabel records the generating component.
inline std::vector<Example> sample_mixture(const Mixture& mix, std::size_t n,
                                           std::uint64_t seed,
                                           std::optional<int> true_label =
                                               std::nullopt) {
  mix.validate();
  Rng rng = Rng(seed).fork("mixture");
  std::vector<Example> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t comp = 0;
    std::vector<double> x = mix.draw(rng, &comp);
    out.emplace_back(std::move(x), static_cast<int>(comp), true_label);
  }
  return out;
}

enum class ScenarioName { separable, nonseparable, samelike, unbiased };

inline const char* scenario_name_str(ScenarioName s) {
  switch (s) {
    case ScenarioName::separable: return "separable";
    case ScenarioName::nonseparable: return "nonseparable";
    case ScenarioName::samelike: return "samelike";
    case ScenarioName::unbiased: return "unbiased";
  }
  return "?";
}

inline ScenarioName parse_scenario_name(std::string_view s) {
  if (s == "separable") return ScenarioName::separable;
  if (s == "nonseparable") return ScenarioName::nonseparable;
  if (s == "samelike") return ScenarioName::samelike;
  if (s == "unbiased") return ScenarioName::unbiased;
  throw ConfigError("unknown scenario '" + std::string(s) + "'");
}

/// 2-D Gaussian benchmark family.  The positive-test and negative
/// class-conditionals are shared by every scenario; only the positive-train
/// class-conditional varies.  The negative mixture is one object used for
/// both train and test, so the fixed-negative assumption holds by
/// construction.
struct Scenario {
  ScenarioName name;
  Mixture pos_test;   // p_te-p
  Mixture neg;        // p_n (train == test)
  Mixture pos_train;  // p_tr-p
  PriorPair priors{0.5, 0.5};
};

inline Scenario make_scenario_spec(ScenarioName name) {
  Scenario s;
  s.name = name;
  s.pos_test = Mixture{{{{-2.0, -1.0}, 0.5}, {{-2.0, 1.0}, 0.5}}};
  s.neg = Mixture{{{{2.0, -1.0}, 0.5}, {{2.0, 1.0}, 0.5}}};
  switch (name) {
    case ScenarioName::separable:
      s.pos_train = Mixture{{{{6.0, -1.0}, 0.5}, {{6.0, 1.0}, 0.5}}};
      break;
    case ScenarioName::nonseparable:
      s.pos_train = Mixture{{{{6.0, -1.0}, 1.0 / 3.0},
                             {{6.0, 1.0}, 1.0 / 3.0},
                             {{-6.0, 0.0}, 1.0 / 3.0}}};
      break;
    case ScenarioName::samelike:
      s.pos_train = s.neg;
      break;
    case ScenarioName::unbiased:
      s.pos_train = s.pos_test;
      break;
  }
  return s;
}

/// Full aPU dataset bundle with oracle labels attached.
struct ApuDataset {
  SampleSet pos;
  SampleSet unl_train;
  SampleSet unl_test;
  SampleSet eval;
  PriorPair priors;
};

namespace detail {

inline SampleSet sample_marginal(const Mixture& pos_mix, const Mixture& neg_mix,
                                 double prior, std::size_t n, Rng rng,
                                 Role role, bool exact_counts) {
  std::vector<char> is_pos(n, 0);
  if (exact_counts) {
    const auto n_pos =
        static_cast<std::size_t>(std::llround(prior * static_cast<double>(n)));
    for (std::size_t i = 0; i < n_pos; ++i) is_pos[i] = 1;
    rng.shuffle(is_pos);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      is_pos[i] = rng.bernoulli(prior) ? 1 : 0;
    }
  }
  std::vector<Example> ex;
  ex.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Mixture& mix = is_pos[i] ? pos_mix : neg_mix;
    std::size_t comp = 0;
    std::vector<double> x = mix.draw(rng, &comp);
    ex.emplace_back(std::move(x), static_cast<int>(comp),
                    is_pos[i] ? 1 : -1);
  }
  return SampleSet(role, std::move(ex));
}

}  // namespace detail

/// Builds the scenario's four sets: positives from p_tr-p, unlabeled-train
/// from the pi_tr marginal, unlabeled-test and eval from the pi_te marginal.
inline ApuDataset make_scenario(ScenarioName name, std::size_t n_p,
                                std::size_t n_tru, std::size_t n_teu,
                                std::size_t n_eval, std::uint64_t seed,
                                bool exact_counts = false) {
  if (n_p < 1 || n_tru < 1 || n_teu < 1 || n_eval < 1) {
    throw DataError("scenario set sizes must be >= 1");
  }
  const Scenario sc = make_scenario_spec(name);
  const Rng root = Rng(seed).fork("scenario");

  std::vector<Example> pos_ex;
  pos_ex.reserve(n_p);
  {
    Rng rng = root.fork("pos");
    for (std::size_t i = 0; i < n_p; ++i) {
      std::size_t comp = 0;
      std::vector<double> x = sc.pos_train.draw(rng, &comp);
      pos_ex.emplace_back(std::move(x), static_cast<int>(comp), 1);
    }
  }

  return ApuDataset{
      SampleSet(Role::positive, std::move(pos_ex)),
      detail::sample_marginal(sc.pos_train, sc.neg, sc.priors.train, n_tru,
                              root.fork("utr"), Role::unlabeled_train,
                              exact_counts),
      detail::sample_marginal(sc.pos_test, sc.neg, sc.priors.test, n_teu,
                              root.fork("ute"), Role::unlabeled_test,
                              exact_counts),
      detail::sample_marginal(sc.pos_test, sc.neg, sc.priors.test, n_eval,
                              root.fork("eval"), Role::eval, exact_counts),
      sc.priors};
}

/// Two-stage biased sampler over a fixed pool, partitioned by distance to the
/// pool mean at the median distance.  Draws come from the low-distance half
/// with probability p_lo, else from the high half, then uniformly within.
/// The tie rule (<= lower median goes low) keeps both halves nonempty for
/// pools of distinct points and makes the n/2 split exact for even n.
class MedianBiasSampler {
 public:
  MedianBiasSampler(const std::vector<Example>& pool, double p_lo,
                    std::uint64_t seed)
      : pool_(&pool), p_lo_(p_lo), rng_(Rng(seed).fork("median-bias")) {
    if (pool.size() < 2) throw DataError("median bias needs a pool of >= 2");
    if (!(p_lo >= 0.0 && p_lo <= 1.0)) {
      throw DataError("p_lo must lie in [0, 1]");
    }
    const std::size_t d = pool.front().dim();
    std::vector<double> mean(d, 0.0);
    for (const Example& e : pool) {
      for (std::size_t i = 0; i < d; ++i) mean[i] += e.features()[i];
    }
    for (double& v : mean) v /= static_cast<double>(pool.size());

    std::vector<double> dist(pool.size());
    for (std::size_t k = 0; k < pool.size(); ++k) {
      double sq = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double diff = pool[k].features()[i] - mean[i];
        sq += diff * diff;
      }
      dist[k] = std::sqrt(sq);
    }
    std::vector<double> sorted = dist;
    std::sort(sorted.begin(), sorted.end());
    const double c_med = sorted[(sorted.size() - 1) / 2];  // lower median
    for (std::size_t k = 0; k < pool.size(); ++k) {
      (dist[k] <= c_med ? lo_ : hi_).push_back(static_cast<std::uint32_t>(k));
    }
    if (lo_.empty() || hi_.empty()) {
      throw DataError("degenerate pool: median split left one half empty");
    }
  }

  const std::vector<std::uint32_t>& low_half() const { return lo_; }
  const std::vector<std::uint32_t>& high_half() const { return hi_; }

  const Example& draw() {
    const std::vector<std::uint32_t>& half = rng_.bernoulli(p_lo_) ? lo_ : hi_;
    return (*pool_)[half[rng_.uniform_int(half.size())]];
  }

 private:
  const std::vector<Example>* pool_;
  double p_lo_;
  Rng rng_;
  std::vector<std::uint32_t> lo_;
  std::vector<std::uint32_t> hi_;
};

/// Sublabel shift sampler: picks sublabel C1 with probability p_c1, else C2,
/// then uniformly within the chosen sublabel.  C1 is the smaller of the two
/// tags present in the pool.
class SublabelBiasSampler {
 public:
  SublabelBiasSampler(const std::vector<Example>& pool, double p_c1,
                      std::uint64_t seed)
      : pool_(&pool), p_c1_(p_c1), rng_(Rng(seed).fork("sublabel-bias")) {
    if (!(p_c1 >= 0.0 && p_c1 <= 1.0)) {
      throw DataError("p_c1 must lie in [0, 1]");
    }
    int c1 = 0;
    int c2 = 0;
    bool have_c1 = false;
    bool have_c2 = false;
    for (const Example& e : pool) {
      if (!e.sublabel()) throw DataError("pool example without sublabel");
      const int tag = *e.sublabel();
      if (!have_c1) {
        c1 = tag;
        have_c1 = true;
      } else if (tag != c1 && !have_c2) {
        c2 = tag;
        have_c2 = true;
      } else if (tag != c1 && tag != c2) {
        throw DataError("sublabel bias expects exactly two sublabels");
      }
    }
    if (!have_c1 || !have_c2) {
      throw DataError("sublabel bias requires both sublabels present");
    }
    if (c2 < c1) std::swap(c1, c2);
    for (std::size_t k = 0; k < pool.size(); ++k) {
      (*pool[k].sublabel() == c1 ? c1_idx_ : c2_idx_)
          .push_back(static_cast<std::uint32_t>(k));
    }
  }

  const Example& draw() {
    const std::vector<std::uint32_t>& group =
        rng_.bernoulli(p_c1_) ? c1_idx_ : c2_idx_;
    return (*pool_)[group[rng_.uniform_int(group.size())]];
  }

 private:
  const std::vector<Example>* pool_;
  double p_c1_;
  Rng rng_;
  std::vector<std::uint32_t> c1_idx_;
  std::vector<std::uint32_t> c2_idx_;
};

/// Shift grid for the class-conditional bias sweeps.
inline std::vector<double> shift_sweep_grid() {
  return {0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
}

}  // namespace apu
