#include "glrstop/glr_linear.hpp"

#include "glrstop/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace glrstop {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDenominatorFloor = 1e-300;

double ratio_or_degenerate(double numerator, double denominator) {
  if (!(denominator >= kDenominatorFloor)) return numerator == 0.0 ? 0.0 : kInf;
  return numerator / denominator;
}

void require_pair(const LinearState& state, ContextId x, ActionId a, ActionId b) {
  if (!state.space().feasible(x, a) || !state.space().feasible(x, b)) {
    throw ConfigError("linear statistic: infeasible (context, action) pair");
  }
  if (!state.ready(a) || !state.ready(b)) throw NotReady("linear statistic: action not ready");
}

// S_a^2 Sigma(x,a) + S_b^2 Sigma(x,b)
double feasible_scale(const LinearState& state, ContextId x, ActionId a, ActionId b, VarianceDivisor divisor) {
  return state.s2(a, divisor) * state.sigma(x, a) + state.s2(b, divisor) * state.sigma(x, b);
}

}  // namespace

LinearState::LinearState(std::shared_ptr<const ContextSpace> space) : space_(std::move(space)) {
  if (!space_) throw ConfigError("linear state: null context space");
  for (const auto& c : space_->contexts()) {
    if (c.features.isZero(0.0)) {
      throw ConfigError("linear state: context '" + c.name + "' has an all-zero feature vector");
    }
  }
  fits_.resize(space_->num_actions());
  for (auto& fit : fits_) fit.stats = LinearActionStats(space_->dimension());
}

void LinearState::record(ContextId x, ActionId a, double y) {
  if (!space_->feasible(x, a)) throw ConfigError("linear state: infeasible (context, action) pair");
  auto& fit = fits_[a.index];
  fit.stats.accumulate(space_->context(x).features, y);
  ++stage_;

  const OlsFactor factor(fit.stats);
  const bool was_ready = fit.ready;
  fit.ready = factor.ready();
  if (fit.ready) {
    fit.beta = factor.solution().beta_hat;
    fit.s2 = factor.solution().s2;
    const auto contexts = space_->contexts();
    fit.fitted.resize(contexts.size());
    fit.sigma.resize(contexts.size());
    for (std::size_t i = 0; i < contexts.size(); ++i) {
      fit.fitted[i] = contexts[i].features.dot(fit.beta);
      fit.sigma[i] = factor.directional_variance(contexts[i].features);
    }
  }
  if (fit.ready && !was_ready) ++ready_count_;
  if (!fit.ready && was_ready) --ready_count_;
  if (!t0_ && all_ready()) t0_ = stage_;
}

const LinearState::Fit& LinearState::ready_fit(ActionId a) const {
  const auto& fit = fits_.at(a.index);
  if (!fit.ready) throw NotReady("linear state: action '" + space_->action_name(a) + "' not ready");
  return fit;
}

const Eigen::VectorXd& LinearState::beta_hat(ActionId a) const { return ready_fit(a).beta; }

double LinearState::s2(ActionId a, VarianceDivisor divisor) const {
  const auto& fit = ready_fit(a);
  if (divisor == VarianceDivisor::Unbiased) return fit.s2;
  const auto n = static_cast<double>(fit.stats.n);
  return fit.s2 * (n - static_cast<double>(dimension())) / n;
}

double LinearState::fitted(ContextId x, ActionId a) const { return ready_fit(a).fitted.at(x.index); }

double LinearState::sigma(ContextId x, ActionId a) const { return ready_fit(a).sigma.at(x.index); }

ActionId empirical_best_linear(const LinearState& state, ContextId x) {
  const auto& ctx = state.space().context(x);
  std::optional<ActionId> best;
  double best_value = -kInf;
  for (ActionId a : ctx.feasible) {
    const double v = state.fitted(x, a);
    if (!best || v > best_value) {
      best = a;
      best_value = v;
    }
  }
  return *best;
}

double glr_statistic_linear(const LinearState& state, ContextId x, ActionId a, ActionId b, double eta,
                            VarianceDivisor divisor) {
  require_pair(state, x, a, b);
  const double gap = state.fitted(x, a) - state.fitted(x, b) + eta;
  return ratio_or_degenerate(gap * gap, 2.0 * feasible_scale(state, x, a, b, divisor));
}

double glr_known_variance_signed(const LinearState& state, ContextId x, ActionId a, ActionId b, double delta,
                                 double var_a, double var_b) {
  require_pair(state, x, a, b);
  if (!(var_a > 0.0) || !(var_b > 0.0)) throw ConfigError("known-variance GLR: variances must be positive");
  const double gap = state.fitted(x, a) - state.fitted(x, b) + delta;
  const double q = ratio_or_degenerate(gap * gap, 2.0 * (var_a * state.sigma(x, a) + var_b * state.sigma(x, b)));
  return gap < 0.0 ? -q : q;
}

double glr_closed_form_known_variance(const LinearState& state, ContextId x, ActionId a, ActionId b,
                                      double delta, double var_a, double var_b) {
  require_pair(state, x, a, b);
  if (state.fitted(x, a) < state.fitted(x, b) - delta) {
    throw PreconditionError("known-variance GLR: fitted value of a is below that of b minus delta");
  }
  return glr_known_variance_signed(state, x, a, b, delta, var_a, var_b);
}

double certified_slack_linear(const LinearState& state, ContextId x, ActionId a, ActionId b, BoundaryValue phi,
                              VarianceDivisor divisor) {
  require_pair(state, x, a, b);
  if (!phi.active()) return kInf;
  const double w = std::sqrt(2.0 * phi.value * feasible_scale(state, x, a, b, divisor)) -
                   (state.fitted(x, a) - state.fitted(x, b));
  return std::max(0.0, w);
}

ContextOutcome evaluate_context_linear(const LinearState& state, const ErrorBudget& budget, ContextId x,
                                       double delta, const RuleOptions& options) {
  ContextOutcome out;
  out.context = x;
  const auto& ctx = state.space().context(x);
  bool feasible_ready = true;
  for (ActionId a : ctx.feasible) feasible_ready = feasible_ready && state.ready(a);
  if (feasible_ready) out.best = empirical_best_linear(state, x);
  if (ctx.feasible.size() < 2) {
    out.best = ctx.feasible.front();
    out.ready = true;
    out.certified = true;
    out.regret = 0.0;
    return out;
  }
  out.regret = kInf;
  if (!feasible_ready || !state.all_ready()) return out;
  out.ready = true;

  const ActionId best = *out.best;
  const double share = *budget.for_context(x);
  const bool p1 = budget.criterion == Criterion::P1;
  const std::size_t d = state.dimension();
  const std::uint64_t n_best = state.stats(best).n;
  const double info_best = 1.0 / state.sigma(x, best);
  bool certified = true;
  double regret = 0.0;
  for (ActionId a : ctx.feasible) {
    if (a == best) continue;
    const BoundaryValue phi =
        boundary_linear(n_best, info_best, state.stats(a).n, 1.0 / state.sigma(x, a), share, d);
    MarginRecord rec{a, 0.0, phi.value, 0.0};
    if (p1) {
      rec.statistic = glr_statistic_linear(state, x, best, a, delta, options.divisor);
      const bool beaten = phi.active() && rec.statistic > phi.value;
      certified = certified && beaten;
      if (!certified && !options.diagnostics) break;
      if (options.diagnostics) rec.slack = certified_slack_linear(state, x, best, a, phi, options.divisor);
    } else {
      rec.slack = certified_slack_linear(state, x, best, a, phi, options.divisor);
      regret = std::max(regret, rec.slack);
      if (std::isinf(regret) && !options.diagnostics) break;
      if (options.diagnostics) rec.statistic = glr_statistic_linear(state, x, best, a, 0.0, options.divisor);
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

namespace {

StopDecision check_stop_linear(const LinearState& state, const ErrorBudget& budget, double delta,
                               const RuleOptions& options, Criterion expected) {
  if (budget.criterion != expected) throw ConfigError("stopping rule: budget built for the other criterion");
  const auto& space = state.space();
  if (budget.per_context.size() != space.num_contexts()) {
    throw ConfigError("stopping rule: budget does not match context space");
  }
  StopDecision decision;
  bool all = true;
  double weighted = 0.0;
  for (std::size_t i = 0; i < space.num_contexts(); ++i) {
    const ContextId x{i};
    if (!options.diagnostics && expected == Criterion::P1 && !all) break;
    auto out = evaluate_context_linear(state, budget, x, delta, options);
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

StopDecision check_stop_p1_linear(const LinearState& state, const ErrorBudget& budget, double delta,
                                  const RuleOptions& options) {
  return check_stop_linear(state, budget, delta, options, Criterion::P1);
}

StopDecision check_stop_p2_linear(const LinearState& state, const ErrorBudget& budget, double delta,
                                  const RuleOptions& options) {
  return check_stop_linear(state, budget, delta, options, Criterion::P2);
}

}  // namespace glrstop
