#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "apu/errors.hpp"
#include "apu/rng.hpp"

namespace apu {

/// Global audit counter for oracle-label reads.  Risk estimators and training
/// loops must never touch true labels; tests pin this by snapshotting the
/// counter around estimator calls.
inline std::atomic<std::uint64_t>& true_label_read_count() {
  static std::atomic<std::uint64_t> count{0};
  return count;
}

class Example {
 public:
  Example() = default;
  explicit Example(std::vector<double> features,
                   std::optional<int> sublabel = std::nullopt,
                   std::optional<int> true_label = std::nullopt)
      : features_(std::move(features)),
        sublabel_(sublabel),
        true_label_(true_label) {
    for (const double v : features_) {
      if (!std::isfinite(v)) {
        throw DataError("example has non-finite feature value");
      }
    }
    if (true_label_ && *true_label_ != 1 && *true_label_ != -1) {
      throw DataError("true label must be +1 or -1");
    }
  }

  const std::vector<double>& features() const { return features_; }
  std::size_t dim() const { return features_.size(); }
  std::optional<int> sublabel() const { return sublabel_; }

  /// Oracle label, visible to the evaluation path only (audited).
  std::optional<int> true_label() const {
    true_label_read_count().fetch_add(1, std::memory_order_relaxed);
    return true_label_;
  }

 private:
  std::vector<double> features_;
  std::optional<int> sublabel_;
  std::optional<int> true_label_;
};

enum class Role { positive, unlabeled_train, unlabeled_test, eval };

inline const char* role_name(Role r) {
  switch (r) {
    case Role::positive: return "positive";
    case Role::unlabeled_train: return "unlabeled_train";
    case Role::unlabeled_test: return "unlabeled_test";
    case Role::eval: return "eval";
  }
  return "?";
}

/// Immutable collection of examples sharing one feature dimension and a role
/// tag.  Feature reads are counted so tests can audit which code paths touch
/// which sets.
class SampleSet {
 public:
  SampleSet(Role role, std::vector<Example> examples)
      : role_(role), examples_(std::move(examples)) {
    if (!examples_.empty()) {
      const std::size_t d = examples_.front().dim();
      for (const Example& e : examples_) {
        if (e.dim() != d) {
          throw DataError("feature dimension mismatch within sample set");
        }
      }
    }
  }

  SampleSet(const SampleSet& other)
      : role_(other.role_), examples_(other.examples_) {}
  SampleSet& operator=(const SampleSet& other) {
    role_ = other.role_;
    examples_ = other.examples_;
    return *this;
  }
  SampleSet(SampleSet&& other) noexcept
      : role_(other.role_), examples_(std::move(other.examples_)) {}
  SampleSet& operator=(SampleSet&& other) noexcept {
    role_ = other.role_;
    examples_ = std::move(other.examples_);
    return *this;
  }

  Role role() const { return role_; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  std::size_t dim() const {
    return examples_.empty() ? 0 : examples_.front().dim();
  }

  /// Full example access for evaluation/oracle code.
  const Example& example(std::size_t i) const { return examples_[i]; }

  /// Audited feature access used by estimator-facing views.
  const std::vector<double>& features(std::size_t i) const {
    feature_reads_.fetch_add(1, std::memory_order_relaxed);
    return examples_[i].features();
  }

  std::uint64_t feature_reads() const {
    return feature_reads_.load(std::memory_order_relaxed);
  }

 private:
  Role role_;
  std::vector<Example> examples_;
  mutable std::atomic<std::uint64_t> feature_reads_{0};
};

/// Feature-only view of (a subset of) a SampleSet.  This is the only shape of
/// data a risk estimator ever sees; true labels are not reachable through it.
class DataView {
 public:
  DataView() = default;
  explicit DataView(const SampleSet& set) : set_(&set) {
    indices_.resize(set.size());
    std::iota(indices_.begin(), indices_.end(), 0);
  }
  DataView(const SampleSet& set, std::vector<std::uint32_t> indices)
      : set_(&set), indices_(std::move(indices)) {}

  bool empty() const { return indices_.empty(); }
  std::size_t size() const { return indices_.size(); }
  const std::vector<double>& features(std::size_t k) const {
    return set_->features(indices_[k]);
  }
  std::uint32_t index(std::size_t k) const { return indices_[k]; }
  const SampleSet* set() const { return set_; }

  DataView slice(std::size_t begin, std::size_t end) const {
    return DataView(*set_, std::vector<std::uint32_t>(
                               indices_.begin() + static_cast<long>(begin),
                               indices_.begin() + static_cast<long>(end)));
  }

 private:
  const SampleSet* set_ = nullptr;
  std::vector<std::uint32_t> indices_;
};

/// DataView plus a per-example weight in [0, 1] (surrogate negative sets).
class WeightedView {
 public:
  WeightedView() = default;
  WeightedView(DataView view, std::vector<double> weights)
      : view_(std::move(view)), weights_(std::move(weights)) {
    if (weights_.size() != view_.size()) {
      throw DataError("weight vector size does not match view size");
    }
  }

  bool empty() const { return view_.empty(); }
  std::size_t size() const { return view_.size(); }
  const std::vector<double>& features(std::size_t k) const {
    return view_.features(k);
  }
  double weight(std::size_t k) const { return weights_[k]; }
  const DataView& view() const { return view_; }

  WeightedView slice(std::size_t begin, std::size_t end) const {
    return WeightedView(
        view_.slice(begin, end),
        std::vector<double>(weights_.begin() + static_cast<long>(begin),
                            weights_.begin() + static_cast<long>(end)));
  }

 private:
  DataView view_;
  std::vector<double> weights_;
};

/// Known positive-class priors of the train and test distributions.  The
/// strict upper bound keeps the 1/(1 - pi_tr) normalizations finite.
struct PriorPair {
  double train = 0.5;
  double test = 0.5;

  PriorPair() = default;
  PriorPair(double pi_tr, double pi_te) : train(pi_tr), test(pi_te) {
    if (!(pi_tr >= 0.0 && pi_tr < 1.0) || !(pi_te >= 0.0 && pi_te < 1.0)) {
      throw DataError("class priors must lie in [0, 1)");
    }
  }
};

struct SplitSpec {
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
};

/// Deterministic disjoint split into (train, validation); the validation part
/// holds round(validation_fraction * n) examples.
inline std::pair<SampleSet, SampleSet> split_train_valid(const SampleSet& set,
                                                         const SplitSpec& spec) {
  const std::size_t n = set.size();
  if (n < 5) {
    throw DataError("set too small to split: need at least 5 examples, have " +
                    std::to_string(n));
  }
  if (!(spec.validation_fraction > 0.0 && spec.validation_fraction < 1.0)) {
    throw DataError("validation fraction must lie in (0, 1)");
  }
  const auto n_valid = static_cast<std::size_t>(
      std::llround(spec.validation_fraction * static_cast<double>(n)));
  if (n_valid == 0 || n_valid >= n) {
    throw DataError("set too small to yield a nonempty validation split");
  }

  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = Rng(spec.seed).fork("train-valid-split");
  rng.shuffle(perm);

  std::vector<Example> train_examples;
  std::vector<Example> valid_examples;
  train_examples.reserve(n - n_valid);
  valid_examples.reserve(n_valid);
  for (std::size_t k = 0; k < n; ++k) {
    if (k < n_valid) {
      valid_examples.push_back(set.example(perm[k]));
    } else {
      train_examples.push_back(set.example(perm[k]));
    }
  }
  return {SampleSet(set.role(), std::move(train_examples)),
          SampleSet(set.role(), std::move(valid_examples))};
}

/// Case-control sample of size n: each draw is positive with probability
/// `prior` (Bernoulli), then uniform within its pool, with replacement.
/// Oracle labels are recorded for downstream evaluation.  When
/// `exact_counts` is set the positive count is fixed to round(prior * n)
/// instead of Bernoulli (variance-reduced variant).
inline SampleSet case_control_sample(const std::vector<Example>& pos_pool,
                                     const std::vector<Example>& neg_pool,
                                     std::size_t n, double prior,
                                     std::uint64_t seed,
                                     Role role = Role::unlabeled_train,
                                     bool exact_counts = false) {
  if (!(prior >= 0.0 && prior < 1.0)) {
    throw DataError("case-control prior must lie in [0, 1)");
  }
  if (pos_pool.empty() && prior > 0.0) {
    throw DataError("empty positive pool with nonzero positive mass");
  }
  if (neg_pool.empty()) {
    throw DataError("empty negative pool with nonzero negative mass");
  }

  Rng rng = Rng(seed).fork("case-control");
  std::vector<char> is_pos(n, 0);
  if (exact_counts) {
    const auto n_pos = static_cast<std::size_t>(
        std::llround(prior * static_cast<double>(n)));
    for (std::size_t i = 0; i < n_pos; ++i) is_pos[i] = 1;
    rng.shuffle(is_pos);
  } else {
    for (std::size_t i = 0; i < n; ++i) is_pos[i] = rng.bernoulli(prior) ? 1 : 0;
  }

  std::vector<Example> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<Example>& pool = is_pos[i] ? pos_pool : neg_pool;
    const Example& src = pool[rng.uniform_int(pool.size())];
    out.emplace_back(src.features(), src.sublabel(),
                     is_pos[i] ? std::optional<int>(1) : std::optional<int>(-1));
  }
  return SampleSet(role, std::move(out));
}

}  // namespace apu
