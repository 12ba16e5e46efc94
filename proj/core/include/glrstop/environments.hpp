#pragma once

#include "glrstop/rng.hpp"
#include "glrstop/stats.hpp"

#include <nlohmann/json_fwd.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace glrstop {

/// Arbitrary means and noise levels per (context, action) pair.
struct TabularEnvironment {
  std::string name;
  std::shared_ptr<const ContextSpace> space;
  std::vector<double> truth;     // m x k, row-major by context
  std::vector<double> noise_sd;  // m x k

  double mean(ContextId x, ActionId a) const;
  double sd(ContextId x, ActionId a) const;
};

/// y(x, a) = f(x)^T beta(a) with noise level sigma(a).
struct LinearEnvironment {
  std::string name;
  std::shared_ptr<const ContextSpace> space;
  std::vector<Eigen::VectorXd> betas;  // per action
  std::vector<double> noise_sd;        // per action
  std::vector<ContextId> design;       // optional design points

  double mean(ContextId x, ActionId a) const;
  double sd(ContextId /*x*/, ActionId a) const { return noise_sd.at(a.index); }
};

using Environment = std::variant<TabularEnvironment, LinearEnvironment>;

/// Checks completeness and positivity; throws ConfigError.
void validate(const TabularEnvironment& env);
void validate(const LinearEnvironment& env);

const ContextSpace& space_of(const Environment& env);
std::shared_ptr<const ContextSpace> shared_space_of(const Environment& env);
double true_mean(const Environment& env, ContextId x, ActionId a);
double noise_sd(const Environment& env, ContextId x, ActionId a);

/// y(x, a) + sigma * N(0, 1). Throws ConfigError for an infeasible pair.
double sample(const Environment& env, ContextId x, ActionId a, Rng& rng);

/// Truth-optimal action per context, lowest index on ties.
std::vector<ActionId> optimal_policy(const Environment& env);

// Benchmark constructions. Seeds drive the random weights and noise levels.
TabularEnvironment toy_env();
TabularEnvironment matyas_env(std::uint64_t weights_seed);
TabularEnvironment dixon_price_env(std::uint64_t seed);
LinearEnvironment standard_linear_env(std::size_t k);

/// Contexts (1, X_2, ..., X_d) over a full grid of levels in [0, 1]; design
/// points are the grid corners.
struct RandomLinearSpec {
  std::size_t k = 5;
  std::size_t d = 2;
  std::size_t levels = 6;
  std::uint64_t seed = 1;
  bool random_weights = false;
};

/// beta ~ U(0, 5) per coordinate, sigma ~ U(0.5, 2), optional U(0, 1) level
/// weights combined as a product distribution.
LinearEnvironment random_linear_env(const RandomLinearSpec& spec);

/// Grid context space used by the linear constructions. level_weights, when
/// given, is one weight per level; the context weight is the product over
/// non-intercept coordinates, renormalized.
std::shared_ptr<const ContextSpace> linear_grid_space(std::size_t k, std::size_t d, std::size_t levels,
                                                      const std::vector<double>& level_weights = {});
std::vector<ContextId> grid_corners(const ContextSpace& space);

// JSON environment files.
Environment environment_from_json(const nlohmann::json& doc);
nlohmann::json environment_to_json(const Environment& env);
Environment load_environment(const std::filesystem::path& path);

// Data sources.
enum class SourceKind { OfflineLog, Simulation, Online };

struct SourceSegment {
  SourceKind kind = SourceKind::Simulation;
  std::uint64_t length = 0;  // 0 means unbounded; only allowed last
};

/// A schedule of segments over stages 1, 2, ...; a single unbounded segment
/// is a plain mode. Offline segments replay `log` in order, continuing where
/// the previous offline segment stopped.
struct DataSourceMode {
  std::vector<SourceSegment> schedule{SourceSegment{}};
  std::vector<std::pair<ContextId, ActionId>> log;

  static DataSourceMode simulation();
  static DataSourceMode online();
  static DataSourceMode offline(std::vector<std::pair<ContextId, ActionId>> log);
};

/// Throws ConfigError for infeasible log entries or a malformed schedule.
void validate(const DataSourceMode& source, const ContextSpace& space);

struct SourceDraw {
  SourceKind kind = SourceKind::Simulation;
  std::optional<ContextId> context;  // set for OfflineLog and Online
  std::optional<ActionId> action;    // set for OfflineLog
};

/// Stage is 1-based. Online draws x ~ p; Simulation leaves the choice to the
/// learner. Throws SourceExhausted past the end of the log or the schedule.
SourceDraw next_context(const DataSourceMode& source, const ContextSpace& space, Rng& rng, std::uint64_t stage);

/// Context draw from p(x).
ContextId draw_context(const ContextSpace& space, Rng& rng);

}  // namespace glrstop
