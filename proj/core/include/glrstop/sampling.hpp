#pragma once

// Sampling strategies. The stopping guarantees hold for any strategy whose
// choice depends only on the past, so this interface is the extension point
// for allocation rules such as OCBA variants.

#include "glrstop/boundary.hpp"
#include "glrstop/glr_linear.hpp"
#include "glrstop/glr_unstructured.hpp"
#include "glrstop/rng.hpp"
#include "glrstop/stats.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace glrstop {

struct SamplingDecision {
  ContextId context;
  ActionId action;
};

class SamplingStrategy {
 public:
  virtual ~SamplingStrategy() = default;

  virtual std::string_view name() const = 0;

  /// Simulation mode: the strategy picks the whole pair.
  virtual SamplingDecision next_pair(const UnstructuredState& state, Rng& rng) = 0;
  virtual SamplingDecision next_pair(const LinearState& state, Rng& rng) = 0;

  /// Online mode: the context is given.
  virtual ActionId next_action(const UnstructuredState& state, ContextId x, Rng& rng) = 0;
  virtual ActionId next_action(const LinearState& state, ContextId x, Rng& rng) = 0;

  /// False while an initial allocation is still in progress.
  virtual bool warmed_up() const { return true; }
};

struct EqualAllocationOptions {
  std::uint64_t n0 = 10;
  /// Linear mode: cycle over these contexts crossed with the actions instead
  /// of cycling actions with all contexts.
  std::vector<ContextId> design;
};

/// Round-robin. Unstructured simulation cycles the feasible (x, a) pairs in
/// lexicographic order; linear simulation cycles actions (or design x action
/// pairs) so that N_t(a) = t / k; online cycles A(x). Warm once every unit has
/// n0 samples from this strategy.
class EqualAllocation final : public SamplingStrategy {
 public:
  EqualAllocation(const ContextSpace& space, EqualAllocationOptions options = {});

  std::string_view name() const override { return "equal_allocation"; }
  SamplingDecision next_pair(const UnstructuredState& state, Rng& rng) override;
  SamplingDecision next_pair(const LinearState& state, Rng& rng) override;
  ActionId next_action(const UnstructuredState& state, ContextId x, Rng& rng) override;
  ActionId next_action(const LinearState& state, ContextId x, Rng& rng) override;
  bool warmed_up() const override { return warm_; }

 private:
  SamplingDecision next_linear();
  ActionId next_online(ContextId x);
  void note_unit_pass(std::uint64_t units);

  const ContextSpace* space_;
  EqualAllocationOptions options_;
  std::vector<SamplingDecision> pairs_;                 // unstructured cycle
  std::vector<SamplingDecision> design_pairs_;          // linear design cycle
  std::vector<std::pair<ActionId, std::vector<ContextId>>> action_contexts_;  // linear action cycle
  std::vector<std::uint64_t> online_counters_;
  std::uint64_t counter_ = 0;
  bool warm_ = false;
};

/// Uniform over feasible pairs (simulation) or over A(x) (online).
class UniformRandom final : public SamplingStrategy {
 public:
  explicit UniformRandom(const ContextSpace& space);

  std::string_view name() const override { return "uniform_random"; }
  SamplingDecision next_pair(const UnstructuredState& state, Rng& rng) override;
  SamplingDecision next_pair(const LinearState& state, Rng& rng) override;
  ActionId next_action(const UnstructuredState& state, ContextId x, Rng& rng) override;
  ActionId next_action(const LinearState& state, ContextId x, Rng& rng) override;

 private:
  SamplingDecision draw_pair(Rng& rng) const;
  ActionId draw_action(ContextId x, Rng& rng) const;

  const ContextSpace* space_;
  std::vector<SamplingDecision> pairs_;
};

/// Samples the comparison with the smallest margin Z~(delta) - phi (inactive
/// boundaries count as -inf; ties go to the pair with the smaller count), and
/// within it the action with fewer samples. Equal allocation until every
/// unit has n0 samples and every comparison is defined.
class GreedyChallenger final : public SamplingStrategy {
 public:
  GreedyChallenger(const ContextSpace& space, ErrorBudget budget, double delta,
                   VarianceDivisor divisor = VarianceDivisor::Unbiased, EqualAllocationOptions fallback = {});

  std::string_view name() const override { return "greedy_challenger"; }
  SamplingDecision next_pair(const UnstructuredState& state, Rng& rng) override;
  SamplingDecision next_pair(const LinearState& state, Rng& rng) override;
  ActionId next_action(const UnstructuredState& state, ContextId x, Rng& rng) override;
  ActionId next_action(const LinearState& state, ContextId x, Rng& rng) override;
  bool warmed_up() const override { return fallback_.warmed_up(); }

 private:
  ErrorBudget budget_;
  double delta_;
  VarianceDivisor divisor_;
  EqualAllocation fallback_;
};

}  // namespace glrstop
