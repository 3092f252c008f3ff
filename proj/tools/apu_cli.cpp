// Command-line front end: synthetic data emission, experiment runs,
// decision-boundary grids, and CSV summaries.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "apu/config.hpp"
#include "apu/errors.hpp"
#include "apu/experiment.hpp"
#include "apu/libsvm.hpp"
#include "apu/pipelines.hpp"
#include "apu/stats.hpp"
#include "apu/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDiverged = 4;

struct CliOptions {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> threads;
  std::string scenario;
  std::size_t resolution = 181;
  std::string stats_csv;
};

apu::ExperimentConfig load_config(const CliOptions& opt) {
  apu::ExperimentConfig cfg = apu::parse_experiment_config_file(opt.config_path);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.trials) cfg.trials = *opt.trials;
  if (opt.threads) cfg.threads = *opt.threads;
  if (!opt.out_path.empty()) cfg.output_csv = opt.out_path;
  cfg.validate();
  return cfg;
}

int cmd_synth(const CliOptions& opt) {
  apu::ScenarioName name{};
  std::size_t n_pos = 1000;
  std::size_t n_tru = 1000;
  std::size_t n_teu = 1000;
  std::size_t n_eval = 2000;
  std::uint64_t seed = opt.seed.value_or(1);
  bool exact = false;
  if (!opt.config_path.empty()) {
    apu::ExperimentConfig cfg = apu::parse_experiment_config_file(opt.config_path);
    if (!cfg.scenario) {
      throw apu::ConfigError("synth needs a scenario data source");
    }
    name = *cfg.scenario;
    n_pos = cfg.n_pos;
    n_tru = cfg.n_unl_train;
    n_teu = cfg.n_unl_test;
    n_eval = cfg.n_eval;
    exact = cfg.exact_counts;
    if (!opt.seed) seed = cfg.seed;
  } else if (!opt.scenario.empty()) {
    name = apu::parse_scenario_name(opt.scenario);
  } else {
    throw apu::ConfigError("synth needs --scenario or --config");
  }

  const std::string out_dir = opt.out_path.empty() ? "." : opt.out_path;
  std::filesystem::create_directories(out_dir);
  const apu::ApuDataset data =
      apu::make_scenario(name, n_pos, n_tru, n_teu, n_eval, seed, exact);

  auto dump = [&out_dir](const apu::SampleSet& set, const std::string& file) {
    const std::string path = out_dir + "/" + file;
    std::ofstream os(path);
    if (!os) throw apu::DataError("cannot write '" + path + "'");
    apu::write_libsvm(os, set);
  };
  dump(data.pos, "pos.libsvm");
  dump(data.unl_train, "unl_train.libsvm");
  dump(data.unl_test, "unl_test.libsvm");
  dump(data.eval, "eval.libsvm");
  std::cout << "wrote " << apu::scenario_name_str(name) << " scenario (seed "
            << seed << ") to " << out_dir << "\n";
  return kExitOk;
}

int cmd_run(const CliOptions& opt) {
  const apu::ExperimentConfig cfg = load_config(opt);
  const apu::ExperimentOutput out = apu::run_experiment_jobs(cfg);
  {
    std::ofstream os(cfg.output_csv);
    if (!os) throw apu::DataError("cannot write '" + cfg.output_csv + "'");
    apu::write_result_csv(os, out.rows);
  }
  apu::write_summary(std::cout, cfg, out);
  std::cout << "rows written to " << cfg.output_csv << "\n";
  return kExitOk;
}

int cmd_grid(const CliOptions& opt) {
  apu::ExperimentConfig cfg = load_config(opt);
  cfg.trials = 1;
  const apu::ExperimentOutput ignored [[maybe_unused]]{};
  std::optional<apu::detail::LibsvmPools> pools;
  if (!cfg.scenario) pools = apu::detail::build_pools(cfg);
  const apu::detail::JobOutcome outcome = apu::detail::run_job(
      cfg, pools ? &*pools : nullptr, cfg.methods.front(), cfg.seed);
  const apu::Model model = apu::Model::from_snapshot(outcome.primary.model);

  const std::string path = opt.out_path.empty() ? "grid.csv" : opt.out_path;
  std::ofstream os(path);
  if (!os) throw apu::DataError("cannot write '" + path + "'");
  apu::emit_boundary_grid(model, -9.0, 9.0, -9.0, 9.0, opt.resolution, os);
  std::cout << "boundary grid for " << apu::method_name(cfg.methods.front())
            << " written to " << path << "\n";
  return kExitOk;
}

int cmd_stats(const CliOptions& opt) {
  std::ifstream in(opt.stats_csv);
  if (!in) throw apu::DataError("cannot open '" + opt.stats_csv + "'");
  std::string line;
  if (!std::getline(in, line)) throw apu::DataError("empty results CSV");

  std::vector<std::string> method_order;
  std::map<std::string, std::vector<double>> by_method;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string seed_str, method, rate_str;
    if (!std::getline(ss, seed_str, ',') || !std::getline(ss, method, ',') ||
        !std::getline(ss, rate_str, ',')) {
      throw apu::DataError("bad results CSV at line " + std::to_string(lineno));
    }
    try {
      const double rate = std::stod(rate_str);
      if (by_method.find(method) == by_method.end()) {
        method_order.push_back(method);
      }
      by_method[method].push_back(rate);
    } catch (const std::exception&) {
      throw apu::DataError("bad misclass_rate at line " + std::to_string(lineno));
    }
  }
  if (method_order.empty()) throw apu::DataError("results CSV has no rows");

  const std::string& reference = method_order.front();
  std::cout << "method        mean(%)  std(%)  p-vs-" << reference << "\n";
  char buf[128];
  for (const std::string& name : method_order) {
    const apu::Summary s = apu::summarize(by_method[name]);
    std::string p_str = "-";
    if (name != reference) {
      const apu::TTestResult tt =
          apu::paired_ttest(by_method[name], by_method[reference]);
      std::snprintf(buf, sizeof buf, "%.4g%s", tt.p,
                    tt.degenerate ? " (zero-variance)" : "");
      p_str = buf;
    }
    std::snprintf(buf, sizeof buf, "%-13s %6.1f  %6.1f  %s", name.c_str(),
                  100.0 * s.mean, 100.0 * s.stddev, p_str.c_str());
    std::cout << buf << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aPU learning: risk estimators, pipelines and benchmarks"};
  app.require_subcommand(1);
  CliOptions opt;

  CLI::App* synth = app.add_subcommand("synth", "emit scenario data as LIBSVM files");
  synth->add_option("--scenario", opt.scenario,
                    "separable|nonseparable|samelike|unbiased");
  synth->add_option("--config", opt.config_path, "experiment config file");
  synth->add_option("--out", opt.out_path, "output directory");
  synth->add_option("--seed", opt.seed, "RNG seed");

  CLI::App* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("--config", opt.config_path, "experiment config file")
      ->required();
  run->add_option("--out", opt.out_path, "results CSV path (overrides config)");
  run->add_option("--seed", opt.seed, "base seed (overrides config)");
  run->add_option("--trials", opt.trials, "trial count (overrides config)");
  run->add_option("--threads", opt.threads, "worker threads (overrides config)");

  CLI::App* grid = app.add_subcommand("grid", "train once and emit a boundary grid");
  grid->add_option("--config", opt.config_path, "experiment config file")
      ->required();
  grid->add_option("--out", opt.out_path, "grid CSV path");
  grid->add_option("--seed", opt.seed, "seed (overrides config)");
  grid->add_option("--resolution", opt.resolution, "points per axis");

  CLI::App* stats = app.add_subcommand("stats", "summarize an existing results CSV");
  stats->add_option("csv", opt.stats_csv, "results CSV from `run`")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (synth->parsed()) return cmd_synth(opt);
    if (run->parsed()) return cmd_run(opt);
    if (grid->parsed()) return cmd_grid(opt);
    return cmd_stats(opt);
  } catch (const apu::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const apu::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const apu::TrainingDiverged& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
