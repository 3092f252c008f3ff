#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "apu/config.hpp"
#include "apu/data.hpp"
#include "apu/errors.hpp"
#include "apu/libsvm.hpp"
#include "apu/pipelines.hpp"
#include "apu/stats.hpp"
#include "apu/synth.hpp"

namespace apu {

struct ResultRow {
  std::uint64_t seed = 0;
  std::string method;
  double misclass_rate = 0.0;
  std::optional<double> step1_error;
  double train_seconds = 0.0;
  int best_epoch = -1;
};

/// Fixed CSV schema; the timing column is excluded from reproducibility
/// comparisons by golden tests.
inline void write_result_csv(std::ostream& os,
                             const std::vector<ResultRow>& rows) {
  os << "seed,method,misclass_rate,step1_error,train_seconds,best_epoch\n";
  char buf[64];
  for (const ResultRow& r : rows) {
    os << r.seed << ',' << r.method << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.misclass_rate);
    os << buf << ',';
    if (r.step1_error) {
      std::snprintf(buf, sizeof buf, "%.17g", *r.step1_error);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.6f", r.train_seconds);
    os << ',' << buf << ',' << r.best_epoch << '\n';
  }
}

namespace detail {

struct LibsvmPools {
  std::vector<Example> positive;
  std::vector<Example> negative;
};

inline LibsvmPools build_pools(const ExperimentConfig& cfg) {
  const LibsvmData data = parse_libsvm_file(cfg.libsvm_path);
  LibsvmPools pools;
  auto contains = [](const std::vector<int>& v, int x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    const int label = data.labels[i];
    const bool is_pos = contains(cfg.libsvm_positive_labels, label);
    const bool is_neg = contains(cfg.libsvm_negative_labels, label);
    if (!is_pos && !is_neg) continue;  // other classes are dropped
    Example e(data.examples[i].features(), label, is_pos ? 1 : -1);
    (is_pos ? pools.positive : pools.negative).push_back(std::move(e));
  }
  if (pools.positive.empty() || pools.negative.empty()) {
    throw DataError("libsvm ingestion produced an empty class pool");
  }
  return pools;
}

/// Draw callback: positive examples may come from a biased sampler, negative
/// examples are always uniform (the fixed-negative assumption).
class PositiveSampler {
 public:
  PositiveSampler(const ExperimentConfig& cfg, const std::vector<Example>& pool,
                  bool train_side, std::uint64_t seed) {
    switch (cfg.bias) {
      case BiasKind::none:
        uniform_.emplace(pool, seed);
        break;
      case BiasKind::median_feature:
        median_.emplace(pool,
                        train_side ? cfg.bias_p_lo_train : cfg.bias_p_lo_test,
                        seed);
        break;
      case BiasKind::sublabel:
        if (train_side) {
          sub_.emplace(pool, cfg.bias_p_c1, seed);
        } else {
          uniform_.emplace(pool, seed);
        }
        break;
    }
  }

  const Example& draw() {
    if (uniform_) return uniform_->draw();
    if (median_) return median_->draw();
    return sub_->draw();
  }

 private:
  struct Uniform {
    const std::vector<Example>* pool;
    Rng rng;
    Uniform(const std::vector<Example>& p, std::uint64_t seed)
        : pool(&p), rng(Rng(seed).fork("uniform-pool")) {}
    const Example& draw() { return (*pool)[rng.uniform_int(pool->size())]; }
  };
  std::optional<Uniform> uniform_;
  std::optional<MedianBiasSampler> median_;
  std::optional<SublabelBiasSampler> sub_;
};

inline SampleSet draw_marginal(PositiveSampler& pos, const std::vector<Example>& neg_pool,
                               std::size_t n, double prior, Role role,
                               bool exact_counts, std::uint64_t seed) {
  Rng rng = Rng(seed).fork("marginal");
  std::vector<char> is_pos(n, 0);
  if (exact_counts) {
    const auto n_p =
        static_cast<std::size_t>(std::llround(prior * static_cast<double>(n)));
    for (std::size_t i = 0; i < n_p; ++i) is_pos[i] = 1;
    rng.shuffle(is_pos);
  } else {
    for (std::size_t i = 0; i < n; ++i) is_pos[i] = rng.bernoulli(prior) ? 1 : 0;
  }
  std::vector<Example> ex;
  ex.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (is_pos[i]) {
      const Example& src = pos.draw();
      ex.emplace_back(src.features(), src.sublabel(), 1);
    } else {
      const Example& src = neg_pool[rng.uniform_int(neg_pool.size())];
      ex.emplace_back(src.features(), src.sublabel(), -1);
    }
  }
  return SampleSet(role, std::move(ex));
}

inline ApuDataset materialize_dataset(const ExperimentConfig& cfg,
                                      const LibsvmPools* pools,
                                      std::uint64_t trial_seed) {
  if (cfg.scenario) {
    return make_scenario(*cfg.scenario, cfg.n_pos, cfg.n_unl_train,
                         cfg.n_unl_test, cfg.n_eval, trial_seed,
                         cfg.exact_counts);
  }
  const Rng root = Rng(trial_seed).fork("libsvm-trial");
  PositiveSampler pos_train_sampler(cfg, pools->positive, true,
                                    root.fork("pos-train").next_u64());
  PositiveSampler pos_test_sampler(cfg, pools->positive, false,
                                   root.fork("pos-test").next_u64());

  std::vector<Example> pos_ex;
  pos_ex.reserve(cfg.n_pos);
  for (std::size_t i = 0; i < cfg.n_pos; ++i) {
    const Example& src = pos_train_sampler.draw();
    pos_ex.emplace_back(src.features(), src.sublabel(), 1);
  }

  return ApuDataset{
      SampleSet(Role::positive, std::move(pos_ex)),
      draw_marginal(pos_train_sampler, pools->negative, cfg.n_unl_train,
                    cfg.priors.train, Role::unlabeled_train, cfg.exact_counts,
                    root.fork("utr").next_u64()),
      draw_marginal(pos_test_sampler, pools->negative, cfg.n_unl_test,
                    cfg.priors.test, Role::unlabeled_test, cfg.exact_counts,
                    root.fork("ute").next_u64()),
      draw_marginal(pos_test_sampler, pools->negative, cfg.n_eval,
                    cfg.priors.test, Role::eval, cfg.exact_counts,
                    root.fork("eval").next_u64()),
      cfg.priors};
}

struct JobOutcome {
  Method method;
  std::uint64_t seed;
  MethodResult primary;                 // nnpu_star: the U_te variant
  std::optional<MethodResult> pooled;   // nnpu_star only
  double seconds = 0.0;
};

inline StepConfig with_input_dim(StepConfig cfg, std::size_t dim) {
  cfg.shape.input_dim = dim;
  return cfg;
}

inline JobOutcome run_job(const ExperimentConfig& cfg, const LibsvmPools* pools,
                          Method method, std::uint64_t trial_seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const ApuDataset data = materialize_dataset(cfg, pools, trial_seed);
  const std::size_t dim = data.pos.dim();
  const StepConfig main_cfg = with_input_dim(cfg.main_cfg, dim);
  const StepConfig step1_cfg = with_input_dim(cfg.step1_cfg, dim);

  JobOutcome out;
  out.method = method;
  out.seed = trial_seed;
  switch (method) {
    case Method::purr:
      out.primary = purr_pipeline(data, cfg.correction, main_cfg,
                                  cfg.validation_fraction, trial_seed);
      break;
    case Method::pu2_wuu:
      out.primary =
          two_step(data, Step2::wuu, cfg.weighting, cfg.correction, cfg.rho,
                   step1_cfg, main_cfg, cfg.validation_fraction, trial_seed);
      break;
    case Method::pu2_apnu:
      out.primary =
          two_step(data, Step2::apnu, cfg.weighting, cfg.correction, cfg.rho,
                   step1_cfg, main_cfg, cfg.validation_fraction, trial_seed);
      break;
    case Method::nnpu_star: {
      NnpuStarResult star =
          nnpu_star(data, main_cfg, cfg.validation_fraction, trial_seed);
      out.primary = std::move(star.on_test_unlabeled);
      out.pooled = std::move(star.on_pooled);
      break;
    }
    case Method::pn_te:
      out.primary = pn_te_pipeline(data, main_cfg, cfg.validation_fraction,
                                   trial_seed);
      break;
  }
  out.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return out;
}

}  // namespace detail

struct ExperimentOutput {
  std::vector<ResultRow> rows;
  std::string nnpu_star_variant;  // "te" or "pooled" when nnpu_star ran
};

/// Runs every (method, seed) job, seeds = seed .. seed + trials - 1, possibly
/// across a worker pool.  Rows are sorted by (method, seed) so output order
/// is independent of scheduling.  For nnPU* both candidate runs are kept and
/// the variant with the better mean test error across seeds is reported.
inline ExperimentOutput run_experiment_jobs(const ExperimentConfig& cfg) {
  cfg.validate();
  std::optional<detail::LibsvmPools> pools;
  if (!cfg.scenario) pools = detail::build_pools(cfg);

  struct Job {
    Method method;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const Method m : cfg.methods) {
    for (int t = 0; t < cfg.trials; ++t) {
      jobs.push_back(Job{m, cfg.seed + static_cast<std::uint64_t>(t)});
    }
  }

  std::vector<detail::JobOutcome> outcomes(jobs.size());
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        outcomes[i] = detail::run_job(cfg, pools ? &*pools : nullptr,
                                      jobs[i].method, jobs[i].seed);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int n_threads = std::min<int>(cfg.threads, static_cast<int>(jobs.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) threads.emplace_back(worker);
    for (std::thread& th : threads) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  // nnPU* selection: better mean test error across seeds.
  ExperimentOutput out;
  bool star_use_pooled = false;
  {
    double sum_te = 0.0;
    double sum_pooled = 0.0;
    int star_count = 0;
    for (const detail::JobOutcome& o : outcomes) {
      if (o.method == Method::nnpu_star) {
        sum_te += o.primary.test_error;
        sum_pooled += o.pooled->test_error;
        ++star_count;
      }
    }
    if (star_count > 0) {
      star_use_pooled = sum_pooled < sum_te;
      out.nnpu_star_variant = star_use_pooled ? "pooled" : "te";
    }
  }

  for (const detail::JobOutcome& o : outcomes) {
    const MethodResult& res = (o.method == Method::nnpu_star && star_use_pooled)
                                  ? *o.pooled
                                  : o.primary;
    ResultRow row;
    row.seed = o.seed;
    row.method = method_name(o.method);
    row.misclass_rate = res.test_error;
    row.step1_error = res.step1_labeling_error;
    row.train_seconds = o.seconds;
    row.best_epoch = res.report.best_epoch;
    out.rows.push_back(std::move(row));
  }
  std::sort(out.rows.begin(), out.rows.end(),
            [](const ResultRow& a, const ResultRow& b) {
              return a.method != b.method ? a.method < b.method
                                          : a.seed < b.seed;
            });
  return out;
}

/// Summary table: mean +- std misclassification (%) per method, with a
/// paired t-test against the first-listed method.
inline void write_summary(std::ostream& os, const ExperimentConfig& cfg,
                          const ExperimentOutput& out) {
  std::map<std::string, std::vector<double>> by_method;
  for (const ResultRow& r : out.rows) {
    by_method[r.method].push_back(r.misclass_rate);
  }
  const std::string reference = method_name(cfg.methods.front());

  os << "method        mean(%)  std(%)  p-vs-" << reference << "\n";
  char buf[128];
  for (const Method m : cfg.methods) {
    const std::string name = method_name(m);
    const std::vector<double>& errors = by_method[name];
    const Summary s = summarize(errors);
    std::string p_str = "-";
    if (name != reference) {
      const TTestResult tt = paired_ttest(errors, by_method[reference]);
      std::snprintf(buf, sizeof buf, "%.4g%s", tt.p,
                    tt.degenerate ? " (zero-variance)" : "");
      p_str = buf;
    }
    std::snprintf(buf, sizeof buf, "%-13s %6.1f  %6.1f  %s", name.c_str(),
                  100.0 * s.mean, 100.0 * s.stddev, p_str.c_str());
    os << buf << "\n";
  }
  if (!out.nnpu_star_variant.empty()) {
    os << "nnpu_star variant: " << out.nnpu_star_variant << "\n";
  }
}

/// Boundary-plot CSV: scores of a 2-D model on a row-major grid.
inline void emit_boundary_grid(const Model& model, double x1_min, double x1_max,
                               double x2_min, double x2_max,
                               std::size_t resolution, std::ostream& os) {
  if (model.shape().input_dim != 2) {
    throw DataError("boundary grids need a 2-D feature space");
  }
  if (resolution < 2) throw DataError("grid resolution must be >= 2");
  os << "x1,x2,score,sign\n";
  char buf[64];
  const double step1 = (x1_max - x1_min) / static_cast<double>(resolution - 1);
  const double step2 = (x2_max - x2_min) / static_cast<double>(resolution - 1);
  for (std::size_t i = 0; i < resolution; ++i) {
    const double x1 = x1_min + static_cast<double>(i) * step1;
    for (std::size_t j = 0; j < resolution; ++j) {
      const double x2 = x2_min + static_cast<double>(j) * step2;
      const std::vector<double> x{x1, x2};
      const double score = model.forward(x);
      std::snprintf(buf, sizeof buf, "%.17g", score);
      os << x1 << ',' << x2 << ',' << buf << ',' << model.predict_sign(x)
         << '\n';
    }
  }
}

}  // namespace apu
