#include "glrstop/boundary.hpp"
#include "glrstop/errors.hpp"
#include "glrstop/harness.hpp"
#include "glrstop/validation_suites.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitCensored = 2;
constexpr int kExitFailed = 3;

std::uint64_t as_count(double v, const char* what) {
  if (!(v >= 1.0) || v != std::floor(v) || v > 9.2e18) throw glrstop::ConfigError(std::string(what) + " must be a positive integer");
  return static_cast<std::uint64_t>(v);
}

struct RunArgs {
  std::string config;
  std::optional<double> reps;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  std::string out;
  bool allow_censor = false;
};

int run_command(const RunArgs& args) {
  auto config = glrstop::load_config(args.config);
  if (args.reps) config.replications = as_count(*args.reps, "--reps");
  if (args.seed) config.seed = *args.seed;
  if (!args.out.empty()) config.output = args.out;
  config.validate();

  const auto report = glrstop::run_experiment(config, args.workers);
  if (config.output.empty() || config.output == "-") {
    glrstop::write_results_csv(std::cout, config, report);
  } else {
    std::ofstream file(config.output);
    if (!file) throw glrstop::ConfigError("cannot open " + config.output);
    glrstop::write_results_csv(file, config, report);
  }
  std::cerr << "replications " << report.replications << "  avg_ssize " << report.avg_ssize << "  std_ssize "
            << report.std_ssize << "  P1 " << report.empirical_p1 << "  P2 " << report.empirical_p2 << "  censored "
            << report.censor_count << "  wall " << report.wall_seconds << "s\n";
  if (report.censor_count > 0 && !args.allow_censor) {
    std::cerr << report.censor_count << " replication(s) reached t_max without stopping\n";
    return kExitCensored;
  }
  return 0;
}

int boundary_command(const std::vector<double>& alphas, double tmax, std::size_t points, const std::string& out) {
  const auto grid = glrstop::log_grid(as_count(tmax, "--tmax"), points);
  if (out.empty() || out == "-") {
    glrstop::emit_boundary_csv(std::cout, alphas, grid);
    return 0;
  }
  std::ofstream file(out);
  if (!file) throw glrstop::ConfigError("cannot open " + out);
  glrstop::emit_boundary_csv(file, alphas, grid);
  return 0;
}

void print_bound(std::ostream& os, const glrstop::CheckResult& c) {
  if (std::isfinite(c.lower) && std::isfinite(c.upper)) {
    os << "in [" << c.lower << ", " << c.upper << "]";
  } else if (std::isfinite(c.upper)) {
    os << "<= " << c.upper;
  } else {
    os << ">= " << c.lower;
  }
}

int oracle_command(const std::string& suite, std::optional<double> reps, std::uint64_t seed) {
  glrstop::SuiteOptions options;
  options.seed = seed;
  if (reps) options.reps = as_count(*reps, "--reps");
  std::vector<std::string_view> names;
  if (suite == "all") {
    names = glrstop::suite_names();
  } else {
    names.push_back(suite);
  }
  bool ok = true;
  std::cout << std::setprecision(6);
  for (auto name : names) {
    const auto result = glrstop::run_suite(name, options);
    for (const auto& c : result.checks) {
      std::cout << (c.passed ? "PASS" : "FAIL") << "  " << result.name << ": " << c.label << " = " << c.value << " ";
      print_bound(std::cout, c);
      std::cout << "\n";
    }
    ok = ok && result.passed();
  }
  return ok ? 0 : kExitFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Precision-guaranteed stopping rules for contextual selection"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run Monte Carlo replications of an experiment config");
  run->add_option("--config", run_args.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--reps", run_args.reps, "Replications (overrides the config)");
  run->add_option("--seed", run_args.seed, "Seed (overrides the config)");
  run->add_option("--workers", run_args.workers, "Worker threads, 0 = hardware concurrency")->capture_default_str();
  run->add_option("--out", run_args.out, "Results CSV, - for stdout (overrides the config)");
  run->add_flag("--allow-censor", run_args.allow_censor, "Exit 0 even if some replications hit t_max");

  std::vector<double> alphas{0.05};
  double tmax = 1e8;
  std::size_t points = 200;
  std::string boundary_out;
  auto* bnd = app.add_subcommand("boundary", "Tabulate gamma(t, alpha) on a log-spaced grid");
  bnd->add_option("--alpha", alphas, "Comma-separated alpha values")->delimiter(',')->capture_default_str();
  bnd->add_option("--tmax", tmax, "Largest stage")->capture_default_str();
  bnd->add_option("--points", points, "Grid points before deduplication")->capture_default_str();
  bnd->add_option("--out", boundary_out, "Output CSV, stdout when omitted");

  std::string suite = "all";
  std::optional<double> oracle_reps;
  std::uint64_t oracle_seed = glrstop::SuiteOptions{}.seed;
  auto* oracle = app.add_subcommand("oracle", "Monte Carlo checks of the deviation inequalities");
  std::vector<std::string> suite_choices{"all"};
  for (auto n : glrstop::suite_names()) suite_choices.emplace_back(n);
  oracle->add_option("--suite", suite, "Suite to run")->check(CLI::IsMember(suite_choices))->capture_default_str();
  oracle->add_option("--reps", oracle_reps, "Paths or instances (suite default when omitted)");
  oracle->add_option("--seed", oracle_seed, "Seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_command(run_args);
    if (*bnd) return boundary_command(alphas, tmax, points, boundary_out);
    if (*oracle) return oracle_command(suite, oracle_reps, oracle_seed);
  } catch (const std::exception& e) {
    std::cerr << "glrstop: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
