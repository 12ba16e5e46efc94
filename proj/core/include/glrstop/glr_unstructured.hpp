#pragma once

#include "glrstop/boundary.hpp"
#include "glrstop/stats.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace glrstop {

/// Sample statistics for every feasible (context, action) pair.
class UnstructuredState {
 public:
  explicit UnstructuredState(std::shared_ptr<const ContextSpace> space);

  /// Appends one observation. Throws ConfigError for an infeasible pair.
  void record(ContextId x, ActionId a, double y);

  const ContextSpace& space() const { return *space_; }
  const std::shared_ptr<const ContextSpace>& shared_space() const { return space_; }
  const PairStats& stats(ContextId x, ActionId a) const;
  std::uint64_t stage() const { return stage_; }

 private:
  std::shared_ptr<const ContextSpace> space_;
  std::vector<PairStats> stats_;  // m x k; infeasible slots stay empty
  std::uint64_t stage_ = 0;
};

/// One challenger comparison against the empirical best of a context.
struct MarginRecord {
  ActionId challenger;
  double statistic = 0.0;  // Z~ at the rule's slack (delta for P1, 0 for P2)
  double boundary = 0.0;   // phi; +inf while inactive
  double slack = 0.0;      // certified slack w
};

struct ContextOutcome {
  ContextId context;
  std::optional<ActionId> best;  // empty until every feasible action has data
  bool ready = false;            // all comparisons well defined
  bool certified = false;        // P1: every challenger beaten at slack delta
  double regret = 0.0;           // P2: r(x, t); +inf when not ready
  std::vector<MarginRecord> margins;  // filled only on request
};

struct StopDecision {
  bool stop = false;
  std::vector<ActionId> policy;  // empirical best per context (when defined)
  std::vector<ContextOutcome> diagnostics;
  double weighted_regret = 0.0;  // P2 only
};

struct RuleOptions {
  VarianceDivisor divisor = VarianceDivisor::Unbiased;
  bool diagnostics = false;
};

/// argmax of the sample means over A(x), lowest index on ties.
/// Throws NotReady if a feasible action has no observation.
ActionId empirical_best(const UnstructuredState& state, ContextId x);

/// 1/2 (mean_a - mean_b + eta)^2 / (S_a^2/n_a + S_b^2/n_b).
/// Zero variances give +inf (distinct numerator) or 0. Throws NotReady when
/// either count is below 2.
double glr_statistic(const PairStats& a, const PairStats& b, double eta,
                     VarianceDivisor divisor = VarianceDivisor::Unbiased);

/// Smallest slack at which a is certified over b:
/// [sqrt(2 phi (S_a^2/n_a + S_b^2/n_b)) - (mean_a - mean_b)]_+, +inf for inactive phi.
double certified_slack(const PairStats& a, const PairStats& b, BoundaryValue phi,
                       VarianceDivisor divisor = VarianceDivisor::Unbiased);

/// Full evaluation of one context under either criterion.
ContextOutcome evaluate_context(const UnstructuredState& state, const ErrorBudget& budget, ContextId x,
                                double delta, const RuleOptions& options = {});

/// r(x, t): largest certified slack of the empirical best; 0 for a single
/// feasible action. Throws NotReady while any comparison is undefined.
double context_regret(const UnstructuredState& state, const ErrorBudget& budget, ContextId x,
                      VarianceDivisor divisor = VarianceDivisor::Unbiased);

/// Stop when every context certifies its empirical best against every
/// challenger with Z~(delta) > phi^I.
StopDecision check_stop_p1(const UnstructuredState& state, const ErrorBudget& budget, double delta,
                           const RuleOptions& options = {});

/// Stop when sum_x p(x) r(x, t) <= delta.
StopDecision check_stop_p2(const UnstructuredState& state, const ErrorBudget& budget, double delta,
                           const RuleOptions& options = {});

/// Incremental evaluator for replication loops: per-context outcomes depend
/// only on that context's statistics, so only contexts touched since the last
/// call are recomputed. Decisions match check_stop_p1 / check_stop_p2.
class UnstructuredMonitor {
 public:
  UnstructuredMonitor(const ContextSpace& space, ErrorBudget budget, double delta, RuleOptions options = {});

  void touch(ContextId x);
  bool should_stop(const UnstructuredState& state);
  const ErrorBudget& budget() const { return budget_; }

 private:
  ErrorBudget budget_;
  double delta_;
  RuleOptions options_;
  std::vector<ContextOutcome> cache_;
  std::vector<std::uint8_t> dirty_;
  std::vector<double> weights_;
};

}  // namespace glrstop
