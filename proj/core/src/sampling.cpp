#include "glrstop/sampling.hpp"

#include "glrstop/errors.hpp"

#include <limits>
#include <optional>

namespace glrstop {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Candidate {
  double margin = kInf;
  std::uint64_t count = 0;
  SamplingDecision decision;
};

bool better(const Candidate& c, const std::optional<Candidate>& incumbent) {
  if (!incumbent) return true;
  if (c.margin != incumbent->margin) return c.margin < incumbent->margin;
  return c.count < incumbent->count;
}

// Smaller count first, lower index on ties.
ActionId lighter(ActionId a, std::uint64_t na, ActionId b, std::uint64_t nb) {
  if (na != nb) return na < nb ? a : b;
  return a < b ? a : b;
}

std::optional<Candidate> scan_context(const UnstructuredState& state, const ErrorBudget& budget, ContextId x,
                                      double delta, VarianceDivisor divisor) {
  const auto& feasible = state.space().context(x).feasible;
  if (feasible.size() < 2) return std::nullopt;
  const ActionId best = empirical_best(state, x);
  const auto& sb = state.stats(x, best);
  const double share = *budget.for_context(x);
  std::optional<Candidate> pick;
  for (ActionId a : feasible) {
    if (a == best) continue;
    const auto& sa = state.stats(x, a);
    const BoundaryValue phi = boundary_unstructured(sb.n, sa.n, share);
    Candidate c;
    c.margin = phi.active() ? glr_statistic(sb, sa, delta, divisor) - phi.value : -kInf;
    c.count = std::min(sb.n, sa.n);
    c.decision = {x, lighter(best, sb.n, a, sa.n)};
    if (better(c, pick)) pick = c;
  }
  return pick;
}

std::optional<Candidate> scan_context(const LinearState& state, const ErrorBudget& budget, ContextId x,
                                      double delta, VarianceDivisor divisor) {
  const auto& feasible = state.space().context(x).feasible;
  if (feasible.size() < 2) return std::nullopt;
  const ActionId best = empirical_best_linear(state, x);
  const std::uint64_t nb = state.stats(best).n;
  const double share = *budget.for_context(x);
  std::optional<Candidate> pick;
  for (ActionId a : feasible) {
    if (a == best) continue;
    const std::uint64_t na = state.stats(a).n;
    const BoundaryValue phi =
        boundary_linear(nb, 1.0 / state.sigma(x, best), na, 1.0 / state.sigma(x, a), share, state.dimension());
    Candidate c;
    c.margin = phi.active() ? glr_statistic_linear(state, x, best, a, delta, divisor) - phi.value : -kInf;
    c.count = std::min(nb, na);
    c.decision = {x, lighter(best, nb, a, na)};
    if (better(c, pick)) pick = c;
  }
  return pick;
}

bool unstructured_ready(const UnstructuredState& state, ContextId x) {
  for (ActionId a : state.space().context(x).feasible) {
    if (state.stats(x, a).n < 2) return false;
  }
  return true;
}

}  // namespace

EqualAllocation::EqualAllocation(const ContextSpace& space, EqualAllocationOptions options)
    : space_(&space), options_(std::move(options)) {
  for (std::size_t a = 0; a < space.num_actions(); ++a) action_contexts_.emplace_back(ActionId{a}, std::vector<ContextId>{});
  for (std::size_t i = 0; i < space.num_contexts(); ++i) {
    for (ActionId a : space.contexts()[i].feasible) {
      pairs_.push_back({ContextId{i}, a});
      action_contexts_[a.index].second.push_back(ContextId{i});
    }
  }
  for (ContextId x : options_.design) {
    if (x.index >= space.num_contexts()) throw ConfigError("equal allocation: unknown design context");
    for (ActionId a : space.context(x).feasible) design_pairs_.push_back({x, a});
  }
  std::erase_if(action_contexts_, [](const auto& v) { return v.second.empty(); });
  online_counters_.assign(space.num_contexts(), 0);
  warm_ = options_.n0 == 0;
}

void EqualAllocation::note_unit_pass(std::uint64_t units) {
  if (!warm_ && counter_ >= options_.n0 * units) warm_ = true;
}

SamplingDecision EqualAllocation::next_pair(const UnstructuredState& /*state*/, Rng& /*rng*/) {
  const auto d = pairs_[counter_ % pairs_.size()];
  ++counter_;
  note_unit_pass(pairs_.size());
  return d;
}

SamplingDecision EqualAllocation::next_linear() {
  if (!design_pairs_.empty()) {
    const auto d = design_pairs_[counter_ % design_pairs_.size()];
    ++counter_;
    note_unit_pass(design_pairs_.size());
    return d;
  }
  const std::size_t k = action_contexts_.size();
  const auto& [action, contexts] = action_contexts_[counter_ % k];
  const ContextId x = contexts[(counter_ / k) % contexts.size()];
  ++counter_;
  note_unit_pass(k);
  return {x, action};
}

SamplingDecision EqualAllocation::next_pair(const LinearState& /*state*/, Rng& /*rng*/) { return next_linear(); }

ActionId EqualAllocation::next_online(ContextId x) {
  const auto& feasible = space_->context(x).feasible;
  auto& c = online_counters_.at(x.index);
  const ActionId a = feasible[c % feasible.size()];
  ++c;
  if (!warm_) {
    bool all = true;
    for (std::size_t i = 0; i < online_counters_.size() && all; ++i) {
      all = online_counters_[i] >= options_.n0 * space_->contexts()[i].feasible.size();
    }
    warm_ = all;
  }
  return a;
}

ActionId EqualAllocation::next_action(const UnstructuredState& /*state*/, ContextId x, Rng& /*rng*/) {
  return next_online(x);
}

ActionId EqualAllocation::next_action(const LinearState& /*state*/, ContextId x, Rng& /*rng*/) {
  return next_online(x);
}

UniformRandom::UniformRandom(const ContextSpace& space) : space_(&space) {
  for (std::size_t i = 0; i < space.num_contexts(); ++i) {
    for (ActionId a : space.contexts()[i].feasible) pairs_.push_back({ContextId{i}, a});
  }
}

SamplingDecision UniformRandom::draw_pair(Rng& rng) const {
  std::uniform_int_distribution<std::size_t> dist(0, pairs_.size() - 1);
  return pairs_[dist(rng)];
}

ActionId UniformRandom::draw_action(ContextId x, Rng& rng) const {
  const auto& feasible = space_->context(x).feasible;
  std::uniform_int_distribution<std::size_t> dist(0, feasible.size() - 1);
  return feasible[dist(rng)];
}

SamplingDecision UniformRandom::next_pair(const UnstructuredState& /*state*/, Rng& rng) { return draw_pair(rng); }
SamplingDecision UniformRandom::next_pair(const LinearState& /*state*/, Rng& rng) { return draw_pair(rng); }
ActionId UniformRandom::next_action(const UnstructuredState& /*state*/, ContextId x, Rng& rng) {
  return draw_action(x, rng);
}
ActionId UniformRandom::next_action(const LinearState& /*state*/, ContextId x, Rng& rng) {
  return draw_action(x, rng);
}

GreedyChallenger::GreedyChallenger(const ContextSpace& space, ErrorBudget budget, double delta,
                                   VarianceDivisor divisor, EqualAllocationOptions fallback)
    : budget_(std::move(budget)), delta_(delta), divisor_(divisor), fallback_(space, std::move(fallback)) {}

SamplingDecision GreedyChallenger::next_pair(const UnstructuredState& state, Rng& rng) {
  const auto& space = state.space();
  if (!fallback_.warmed_up()) return fallback_.next_pair(state, rng);
  for (std::size_t i = 0; i < space.num_contexts(); ++i) {
    if (!unstructured_ready(state, ContextId{i})) return fallback_.next_pair(state, rng);
  }
  std::optional<Candidate> pick;
  for (std::size_t i = 0; i < space.num_contexts(); ++i) {
    auto c = scan_context(state, budget_, ContextId{i}, delta_, divisor_);
    if (c && better(*c, pick)) pick = c;
  }
  if (!pick) return fallback_.next_pair(state, rng);
  return pick->decision;
}

SamplingDecision GreedyChallenger::next_pair(const LinearState& state, Rng& rng) {
  if (!fallback_.warmed_up() || !state.all_ready()) return fallback_.next_pair(state, rng);
  std::optional<Candidate> pick;
  for (std::size_t i = 0; i < state.space().num_contexts(); ++i) {
    auto c = scan_context(state, budget_, ContextId{i}, delta_, divisor_);
    if (c && better(*c, pick)) pick = c;
  }
  if (!pick) return fallback_.next_pair(state, rng);
  return pick->decision;
}

ActionId GreedyChallenger::next_action(const UnstructuredState& state, ContextId x, Rng& rng) {
  if (!fallback_.warmed_up() || !unstructured_ready(state, x)) return fallback_.next_action(state, x, rng);
  auto c = scan_context(state, budget_, x, delta_, divisor_);
  return c ? c->decision.action : fallback_.next_action(state, x, rng);
}

ActionId GreedyChallenger::next_action(const LinearState& state, ContextId x, Rng& rng) {
  if (!fallback_.warmed_up() || !state.all_ready()) return fallback_.next_action(state, x, rng);
  auto c = scan_context(state, budget_, x, delta_, divisor_);
  return c ? c->decision.action : fallback_.next_action(state, x, rng);
}

}  // namespace glrstop
