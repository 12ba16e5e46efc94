#include "glrstop/glr_unstructured.hpp"

#include "glrstop/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace glrstop {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool pair_ready(const PairStats& s) { return s.n >= 2; }

// S_a^2/n_a + S_b^2/n_b
double pooled_scale(const PairStats& a, const PairStats& b, VarianceDivisor divisor) {
  return a.variance(divisor) / static_cast<double>(a.n) + b.variance(divisor) / static_cast<double>(b.n);
}

std::optional<ActionId> try_empirical_best(const UnstructuredState& state, ContextId x) {
  const auto& ctx = state.space().context(x);
  std::optional<ActionId> best;
  double best_mean = -kInf;
  for (ActionId a : ctx.feasible) {
    const auto& s = state.stats(x, a);
    if (s.n == 0) return std::nullopt;
    if (!best || s.mean > best_mean) {
      best = a;
      best_mean = s.mean;
    }
  }
  return best;
}

}  // namespace

UnstructuredState::UnstructuredState(std::shared_ptr<const ContextSpace> space) : space_(std::move(space)) {
  if (!space_) throw ConfigError("unstructured state: null context space");
  stats_.resize(space_->num_contexts() * space_->num_actions());
}

void UnstructuredState::record(ContextId x, ActionId a, double y) {
  if (!space_->feasible(x, a)) throw ConfigError("unstructured state: infeasible (context, action) pair");
  auto& s = stats_[x.index * space_->num_actions() + a.index];
  s = update_pair(s, y);
  ++stage_;
}

const PairStats& UnstructuredState::stats(ContextId x, ActionId a) const {
  if (x.index >= space_->num_contexts() || a.index >= space_->num_actions()) {
    throw ConfigError("unstructured state: index out of range");
  }
  return stats_[x.index * space_->num_actions() + a.index];
}

ActionId empirical_best(const UnstructuredState& state, ContextId x) {
  auto best = try_empirical_best(state, x);
  if (!best) throw NotReady("empirical best: some feasible action has no observation");
  return *best;
}

double glr_statistic(const PairStats& a, const PairStats& b, double eta, VarianceDivisor divisor) {
  if (!pair_ready(a) || !pair_ready(b)) throw NotReady("glr statistic: each action needs >= 2 observations");
  const double gap = a.mean - b.mean + eta;
  const double scale = pooled_scale(a, b, divisor);
  if (!(scale > 0.0)) return gap == 0.0 ? 0.0 : kInf;
  return 0.5 * gap * gap / scale;
}

double certified_slack(const PairStats& a, const PairStats& b, BoundaryValue phi, VarianceDivisor divisor) {
  if (!pair_ready(a) || !pair_ready(b)) throw NotReady("certified slack: each action needs >= 2 observations");
  if (!phi.active()) return kInf;
  const double w = std::sqrt(2.0 * phi.value * pooled_scale(a, b, divisor)) - (a.mean - b.mean);
  return std::max(0.0, w);
}

ContextOutcome evaluate_context(const UnstructuredState& state, const ErrorBudget& budget, ContextId x,
                                double delta, const RuleOptions& options) {
  ContextOutcome out;
  out.context = x;
  out.best = try_empirical_best(state, x);
  const auto& ctx = state.space().context(x);
  if (ctx.feasible.size() < 2) {
    // nothing to compare, with or without data
    out.best = ctx.feasible.front();
    out.ready = true;
    out.certified = true;
    out.regret = 0.0;
    return out;
  }
  out.regret = kInf;
  if (!out.best) return out;
  const ActionId best = *out.best;
  const auto& sb = state.stats(x, best);
  if (!pair_ready(sb)) return out;
  for (ActionId a : ctx.feasible) {
    if (a != best && !pair_ready(state.stats(x, a))) return out;
  }
  out.ready = true;

  const double share = *budget.for_context(x);
  const bool p1 = budget.criterion == Criterion::P1;
  bool certified = true;
  double regret = 0.0;
  for (ActionId a : ctx.feasible) {
    if (a == best) continue;
    const auto& sa = state.stats(x, a);
    const BoundaryValue phi = boundary_unstructured(sb.n, sa.n, share);
    MarginRecord rec{a, 0.0, phi.value, 0.0};
    if (p1) {
      rec.statistic = glr_statistic(sb, sa, delta, options.divisor);
      // strict inequality; an inactive boundary certifies nothing
      const bool beaten = phi.active() && rec.statistic > phi.value;
      certified = certified && beaten;
      if (!certified && !options.diagnostics) break;
      if (options.diagnostics) rec.slack = certified_slack(sb, sa, phi, options.divisor);
    } else {
      rec.slack = certified_slack(sb, sa, phi, options.divisor);
      regret = std::max(regret, rec.slack);
      if (std::isinf(regret) && !options.diagnostics) break;
      if (options.diagnostics) rec.statistic = glr_statistic(sb, sa, 0.0, options.divisor);
    }
    if (options.diagnostics) out.margins.push_back(rec);
  }
  if (p1) {
    out.certified = certified;
  } else {
    out.regret = regret;
    out.certified = regret <= delta;
  }
  return out;
}

double context_regret(const UnstructuredState& state, const ErrorBudget& budget, ContextId x,
                      VarianceDivisor divisor) {
  ErrorBudget p2 = budget;
  p2.criterion = Criterion::P2;
  const auto out = evaluate_context(state, p2, x, 0.0, RuleOptions{divisor, false});
  if (!out.ready) throw NotReady("context regret: some comparison is not yet defined");
  return out.regret;
}

namespace {

StopDecision check_stop(const UnstructuredState& state, const ErrorBudget& budget, double delta,
                        const RuleOptions& options, Criterion expected) {
  if (budget.criterion != expected) throw ConfigError("stopping rule: budget built for the other criterion");
  if (budget.per_context.size() != state.space().num_contexts()) {
    throw ConfigError("stopping rule: budget does not match context space");
  }
  StopDecision decision;
  const auto& space = state.space();
  bool all = true;
  double weighted = 0.0;
  for (std::size_t i = 0; i < space.num_contexts(); ++i) {
    const ContextId x{i};
    auto out = evaluate_context(state, budget, x, delta, options);
    if (out.best) decision.policy.push_back(*out.best);
    if (expected == Criterion::P1) {
      all = all && out.certified;
    } else {
      weighted += space.context(x).probability * out.regret;
    }
    if (options.diagnostics) decision.diagnostics.push_back(std::move(out));
  }
  if (decision.policy.size() != space.num_contexts()) decision.policy.clear();
  if (expected == Criterion::P1) {
    decision.stop = all;
  } else {
    decision.weighted_regret = weighted;
    decision.stop = weighted <= delta;
  }
  return decision;
}

}  // namespace

StopDecision check_stop_p1(const UnstructuredState& state, const ErrorBudget& budget, double delta,
                           const RuleOptions& options) {
  return check_stop(state, budget, delta, options, Criterion::P1);
}

StopDecision check_stop_p2(const UnstructuredState& state, const ErrorBudget& budget, double delta,
                           const RuleOptions& options) {
  return check_stop(state, budget, delta, options, Criterion::P2);
}

UnstructuredMonitor::UnstructuredMonitor(const ContextSpace& space, ErrorBudget budget, double delta,
                                         RuleOptions options)
    : budget_(std::move(budget)), delta_(delta), options_(options) {
  options_.diagnostics = false;
  cache_.resize(space.num_contexts());
  dirty_.assign(space.num_contexts(), 1);
  for (const auto& c : space.contexts()) weights_.push_back(c.probability);
}

void UnstructuredMonitor::touch(ContextId x) { dirty_.at(x.index) = 1; }

bool UnstructuredMonitor::should_stop(const UnstructuredState& state) {
  const bool p1 = budget_.criterion == Criterion::P1;
  bool all = true;
  double weighted = 0.0;
  for (std::size_t i = 0; i < cache_.size(); ++i) {
    if (dirty_[i]) {
      cache_[i] = evaluate_context(state, budget_, ContextId{i}, delta_, options_);
      dirty_[i] = 0;
    }
    if (p1) {
      if (!cache_[i].certified) all = false;
    } else {
      weighted += weights_[i] * cache_[i].regret;
    }
  }
  return p1 ? all : weighted <= delta_;
}

}  // namespace glrstop
