#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "apu/errors.hpp"
#include "apu/losses.hpp"
#include "apu/pipelines.hpp"
#include "apu/synth.hpp"

namespace apu {

enum class Method { purr, pu2_wuu, pu2_apnu, nnpu_star, pn_te };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::purr: return "purr";
    case Method::pu2_wuu: return "pu2_wuu";
    case Method::pu2_apnu: return "pu2_apnu";
    case Method::nnpu_star: return "nnpu_star";
    case Method::pn_te: return "pn_te";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "purr") return Method::purr;
  if (s == "pu2_wuu") return Method::pu2_wuu;
  if (s == "pu2_apnu") return Method::pu2_apnu;
  if (s == "nnpu_star") return Method::nnpu_star;
  if (s == "pn_te") return Method::pn_te;
  throw ConfigError("unknown method '" + s + "'");
}

enum class BiasKind { none, median_feature, sublabel };

/// Everything one experiment run needs; parsed from a flat dotted-key
/// `key = value` text file.  Unknown keys are rejected.
struct ExperimentConfig {
  // Data source: exactly one of scenario / libsvm path.
  std::optional<ScenarioName> scenario;
  std::string libsvm_path;
  std::vector<int> libsvm_positive_labels{1};
  std::vector<int> libsvm_negative_labels{-1};
  std::size_t n_pos = 1000;
  std::size_t n_unl_train = 1000;
  std::size_t n_unl_test = 1000;
  std::size_t n_eval = 2000;
  bool exact_counts = false;

  BiasKind bias = BiasKind::none;
  double bias_p_lo_train = 0.9;
  double bias_p_lo_test = 0.1;
  double bias_p_c1 = 0.5;

  PriorPair priors{0.5, 0.5};

  std::vector<Method> methods;
  Correction correction = Correction::abs;
  WeightingScheme weighting = WeightingScheme::soft;
  double rho = 0.5;

  StepConfig main_cfg;   // final classifier (and single-stage methods)
  StepConfig step1_cfg;  // probabilistic step-1 classifier

  double validation_fraction = 0.2;
  std::uint64_t seed = 1;
  int trials = 10;
  int threads = 1;
  std::string output_csv = "results.csv";

  void validate() const {
    if (methods.empty()) throw ConfigError("config lists no methods");
    if (scenario.has_value() == !libsvm_path.empty()) {
      throw ConfigError(
          "config needs exactly one data source: data.scenario or "
          "data.libsvm.path");
    }
    if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("rho must be in [0, 1]");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
      throw ConfigError("split.validation_fraction must be in (0, 1)");
    }
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (n_pos < 5 || n_unl_train < 5 || n_unl_test < 5 || n_eval < 1) {
      throw ConfigError("set sizes too small (training sets need >= 5)");
    }
    if (!(bias_p_lo_train >= 0.0 && bias_p_lo_train <= 1.0) ||
        !(bias_p_lo_test >= 0.0 && bias_p_lo_test <= 1.0) ||
        !(bias_p_c1 >= 0.0 && bias_p_c1 <= 1.0)) {
      throw ConfigError("bias probabilities must lie in [0, 1]");
    }
  }
};

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": expected key = value");
      }
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) {
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": empty key");
      }
      if (!values_.emplace(key, value).second) {
        throw ConfigError("duplicate config key '" + key + "'");
      }
    }
  }

  std::optional<std::string> take(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    std::string v = it->second;
    values_.erase(it);
    return v;
  }

  void reject_unknown() const {
    if (!values_.empty()) {
      std::string keys;
      for (const auto& [k, v] : values_) {
        if (!keys.empty()) keys += ", ";
        keys += k;
      }
      throw ConfigError("unknown config keys: " + keys);
    }
  }

  static std::string trim(const std::string& s) {
    const std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

 private:
  std::map<std::string, std::string> values_;
};

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" +
                      v + "'");
  }
}

inline long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long n = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" +
                      v + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" +
                    v + "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : v) {
    if (c == ',') {
      const std::string t = ConfigReader::trim(cur);
      if (!t.empty()) out.push_back(t);
      cur.clear();
    } else {
      cur += c;
    }
  }
  const std::string t = ConfigReader::trim(cur);
  if (!t.empty()) out.push_back(t);
  return out;
}

inline LossKind parse_loss(const std::string& key, const std::string& v) {
  if (v == "sigmoid") return LossKind::sigmoid;
  if (v == "logistic") return LossKind::logistic;
  throw ConfigError("config key '" + key +
                    "': loss must be sigmoid or logistic, got '" + v + "'");
}

inline void read_step(ConfigReader& r, const std::string& prefix,
                      StepConfig& cfg, bool with_loss) {
  if (auto v = r.take(prefix + "model.hidden_layers")) {
    const long long layers = to_int(prefix + "model.hidden_layers", *v);
    if (layers < 0 || layers > 3) {
      throw ConfigError("hidden_layers must be in 0..3");
    }
    long long units = 16;
    if (auto u = r.take(prefix + "model.hidden_units")) {
      units = to_int(prefix + "model.hidden_units", *u);
      if (units < 1) throw ConfigError("hidden_units must be >= 1");
    }
    cfg.shape.hidden.assign(static_cast<std::size_t>(layers),
                            static_cast<std::size_t>(units));
  } else if (auto u = r.take(prefix + "model.hidden_units")) {
    throw ConfigError("'" + prefix +
                      "model.hidden_units' needs hidden_layers as well");
  }
  if (auto v = r.take(prefix + "train.epochs")) {
    cfg.train.epochs = static_cast<int>(to_int(prefix + "train.epochs", *v));
  }
  if (auto v = r.take(prefix + "train.batches_per_epoch")) {
    cfg.train.batches_per_epoch =
        static_cast<int>(to_int(prefix + "train.batches_per_epoch", *v));
  }
  if (auto v = r.take(prefix + "train.eta")) {
    cfg.train.eta = to_double(prefix + "train.eta", *v);
  }
  if (auto v = r.take(prefix + "train.lambda")) {
    cfg.train.lambda = to_double(prefix + "train.lambda", *v);
  }
  if (auto v = r.take(prefix + "train.gamma")) {
    cfg.train.gamma = to_double(prefix + "train.gamma", *v);
  }
  if (with_loss) {
    if (auto v = r.take(prefix + "train.loss")) {
      cfg.loss = parse_loss(prefix + "train.loss", *v);
    }
  }
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(std::istream& in) {
  detail::ConfigReader r(in);
  ExperimentConfig cfg;
  cfg.main_cfg.train.epochs = 100;
  cfg.main_cfg.train.batches_per_epoch = 2;
  cfg.step1_cfg.train.epochs = 100;
  cfg.step1_cfg.train.batches_per_epoch = 2;
  cfg.step1_cfg.loss = LossKind::logistic;

  if (auto v = r.take("data.scenario")) cfg.scenario = parse_scenario_name(*v);
  if (auto v = r.take("data.libsvm.path")) cfg.libsvm_path = *v;
  if (auto v = r.take("data.libsvm.positive_labels")) {
    cfg.libsvm_positive_labels.clear();
    for (const std::string& s : detail::split_list(*v)) {
      cfg.libsvm_positive_labels.push_back(
          static_cast<int>(detail::to_int("data.libsvm.positive_labels", s)));
    }
  }
  if (auto v = r.take("data.libsvm.negative_labels")) {
    cfg.libsvm_negative_labels.clear();
    for (const std::string& s : detail::split_list(*v)) {
      cfg.libsvm_negative_labels.push_back(
          static_cast<int>(detail::to_int("data.libsvm.negative_labels", s)));
    }
  }
  if (auto v = r.take("data.n_pos")) {
    cfg.n_pos = static_cast<std::size_t>(detail::to_int("data.n_pos", *v));
  }
  if (auto v = r.take("data.n_unl_train")) {
    cfg.n_unl_train =
        static_cast<std::size_t>(detail::to_int("data.n_unl_train", *v));
  }
  if (auto v = r.take("data.n_unl_test")) {
    cfg.n_unl_test =
        static_cast<std::size_t>(detail::to_int("data.n_unl_test", *v));
  }
  if (auto v = r.take("data.n_eval")) {
    cfg.n_eval = static_cast<std::size_t>(detail::to_int("data.n_eval", *v));
  }
  if (auto v = r.take("data.exact_counts")) {
    cfg.exact_counts = detail::to_bool("data.exact_counts", *v);
  }

  if (auto v = r.take("bias.kind")) {
    if (*v == "none") {
      cfg.bias = BiasKind::none;
    } else if (*v == "median_feature") {
      cfg.bias = BiasKind::median_feature;
    } else if (*v == "sublabel") {
      cfg.bias = BiasKind::sublabel;
    } else {
      throw ConfigError("bias.kind must be none, median_feature or sublabel");
    }
  }
  if (auto v = r.take("bias.p_lo_train")) {
    cfg.bias_p_lo_train = detail::to_double("bias.p_lo_train", *v);
  }
  if (auto v = r.take("bias.p_lo_test")) {
    cfg.bias_p_lo_test = detail::to_double("bias.p_lo_test", *v);
  }
  if (auto v = r.take("bias.p_c1")) {
    cfg.bias_p_c1 = detail::to_double("bias.p_c1", *v);
  }

  {
    double pi_tr = cfg.priors.train;
    double pi_te = cfg.priors.test;
    if (auto v = r.take("priors.train")) pi_tr = detail::to_double("priors.train", *v);
    if (auto v = r.take("priors.test")) pi_te = detail::to_double("priors.test", *v);
    try {
      cfg.priors = PriorPair(pi_tr, pi_te);
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
  }

  if (auto v = r.take("methods")) {
    for (const std::string& s : detail::split_list(*v)) {
      cfg.methods.push_back(parse_method(s));
    }
  }
  if (auto v = r.take("correction")) {
    if (*v == "abs") {
      cfg.correction = Correction::abs;
    } else if (*v == "nn") {
      cfg.correction = Correction::nn;
    } else {
      throw ConfigError("correction must be abs or nn");
    }
  }
  if (auto v = r.take("weighting")) {
    if (*v == "soft") {
      cfg.weighting = WeightingScheme::soft;
    } else if (*v == "hard") {
      cfg.weighting = WeightingScheme::hard;
    } else if (*v == "top_k") {
      cfg.weighting = WeightingScheme::top_k;
    } else {
      throw ConfigError("weighting must be soft, hard or top_k");
    }
  }
  if (auto v = r.take("rho")) cfg.rho = detail::to_double("rho", *v);

  detail::read_step(r, "", cfg.main_cfg, /*with_loss=*/true);
  detail::read_step(r, "step1.", cfg.step1_cfg, /*with_loss=*/false);

  if (auto v = r.take("split.validation_fraction")) {
    cfg.validation_fraction = detail::to_double("split.validation_fraction", *v);
  }
  if (auto v = r.take("seed")) {
    cfg.seed = static_cast<std::uint64_t>(detail::to_int("seed", *v));
  }
  if (auto v = r.take("trials")) {
    cfg.trials = static_cast<int>(detail::to_int("trials", *v));
  }
  if (auto v = r.take("threads")) {
    cfg.threads = static_cast<int>(detail::to_int("threads", *v));
  }
  if (auto v = r.take("output.csv")) cfg.output_csv = *v;

  r.reject_unknown();

  try {
    cfg.main_cfg.train.validate();
    cfg.step1_cfg.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_experiment_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_experiment_config(in);
}

}  // namespace apu
