#pragma once

#include "glrstop/boundary.hpp"
#include "glrstop/environments.hpp"
#include "glrstop/sampling.hpp"
#include "glrstop/stats.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace glrstop {

enum class Setting { Unstructured, Linear };

struct StrategyConfig {
  std::string name = "equal_allocation";  // equal_allocation | uniform_random | greedy_challenger
  std::uint64_t n0 = 10;
  bool use_design = false;  // linear equal allocation over design x action pairs
};

struct ExperimentConfig {
  std::shared_ptr<const Environment> environment;
  Setting setting = Setting::Unstructured;
  Criterion criterion = Criterion::P1;
  double alpha = 0.05;
  double delta = 0.1;
  StrategyConfig strategy;
  std::uint64_t check_interval = 1;
  VarianceDivisor divisor = VarianceDivisor::Unbiased;
  DataSourceMode source;
  std::uint64_t replications = 100;
  std::uint64_t seed = 1;
  std::uint64_t t_max = 10'000'000;
  std::string output;
  std::string environment_ref;  // serialized environment spec, echoed in reports

  /// Throws ConfigError on out-of-range values or a setting the environment
  /// cannot support (a tabular environment has no linear model).
  void validate() const;
};

/// Parses a config document. Relative environment files are resolved against
/// base_dir first, then the installed data directory.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

struct ReplicationResult {
  std::uint64_t replication = 0;
  std::uint64_t stop_time = 0;  // t_max when censored
  bool censored = false;
  std::vector<ActionId> policy;
  double p1_indicator = 0.0;
  int p2_indicator = 0;
};

struct AggregateReport {
  std::uint64_t replications = 0;
  double avg_ssize = 0.0;
  double std_ssize = 0.0;  // n - 1 divisor
  double empirical_p1 = 0.0;
  double empirical_p2 = 0.0;
  std::uint64_t censor_count = 0;
  double wall_seconds = 0.0;
  std::string config_echo;
  std::vector<ReplicationResult> results;  // indexed by replication
};

/// Indicator values of a policy against the ground truth:
/// p1 = sum_x p(x) 1{y(x, pi(x)) >= y(x, pi*(x)) - delta},
/// p2 = 1{V(pi) >= V(pi*) - delta}.
std::pair<double, int> precision_indicators(const Environment& env, const std::vector<ActionId>& policy,
                                            double delta);

std::unique_ptr<SamplingStrategy> make_strategy(const ExperimentConfig& config, const ErrorBudget& budget);

ReplicationResult run_replication(const ExperimentConfig& config, std::uint64_t rep_index);

/// Replications are spread over `workers` threads (0 = hardware concurrency);
/// the report does not depend on the worker count.
AggregateReport run_experiment(const ExperimentConfig& config, unsigned workers = 1);

AggregateReport aggregate(std::vector<ReplicationResult> results);

/// "# schema=1" comment, then kind,replication,stop_time,stop_time_std,censored,p1,p2,policy.
void write_results_csv(std::ostream& out, const ExperimentConfig& config, const AggregateReport& report);

/// Log-spaced grid of `points` integer stages in [1, t_max], duplicates removed.
std::vector<std::uint64_t> log_grid(std::uint64_t t_max, std::size_t points = 200);

/// "# schema=1" comment, then t,alpha,gamma,asymptotic_reference. Inactive
/// stages print gamma as inf.
void emit_boundary_csv(std::ostream& out, const std::vector<double>& alphas, const std::vector<std::uint64_t>& grid);

std::filesystem::path default_data_dir();

}  // namespace glrstop
