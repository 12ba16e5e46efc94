#pragma once

#include "glrstop/boundary.hpp"
#include "glrstop/glr_unstructured.hpp"
#include "glrstop/stats.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace glrstop {

/// Per-action least-squares fits over a shared context space. Each record
/// refits the touched action, so fitted values and Sigma_t(x, a) are always
/// current.
class LinearState {
 public:
  /// Throws ConfigError if some context has an all-zero feature vector.
  explicit LinearState(std::shared_ptr<const ContextSpace> space);

  void record(ContextId x, ActionId a, double y);

  const ContextSpace& space() const { return *space_; }
  const std::shared_ptr<const ContextSpace>& shared_space() const { return space_; }
  std::size_t dimension() const { return space_->dimension(); }
  std::uint64_t stage() const { return stage_; }

  const LinearActionStats& stats(ActionId a) const { return fits_.at(a.index).stats; }
  bool ready(ActionId a) const { return fits_.at(a.index).ready; }
  bool all_ready() const { return ready_count_ == fits_.size(); }
  /// First stage at which every action was ready.
  std::optional<std::uint64_t> t0() const { return t0_; }

  /// Throw NotReady for an unready action.
  const Eigen::VectorXd& beta_hat(ActionId a) const;
  double s2(ActionId a, VarianceDivisor divisor = VarianceDivisor::Unbiased) const;
  double fitted(ContextId x, ActionId a) const;
  /// f(x)^T D^{-1} f(x)
  double sigma(ContextId x, ActionId a) const;

 private:
  struct Fit {
    LinearActionStats stats;
    bool ready = false;
    Eigen::VectorXd beta;
    double s2 = 0.0;
    std::vector<double> fitted;  // per context
    std::vector<double> sigma;   // per context
  };

  const Fit& ready_fit(ActionId a) const;

  std::shared_ptr<const ContextSpace> space_;
  std::vector<Fit> fits_;
  std::size_t ready_count_ = 0;
  std::uint64_t stage_ = 0;
  std::optional<std::uint64_t> t0_;
};

/// argmax_a f(x)^T beta_hat(a) over A(x), lowest index on ties.
ActionId empirical_best_linear(const LinearState& state, ContextId x);

/// (yhat_a - yhat_b + eta)^2 / (2 (S_a^2 Sigma(x,a) + S_b^2 Sigma(x,b))).
/// S^2 uses divisor n - d unless ML is requested. A denominator below 1e-300
/// gives +inf (distinct numerator) or 0.
double glr_statistic_linear(const LinearState& state, ContextId x, ActionId a, ActionId b, double eta,
                            VarianceDivisor divisor = VarianceDivisor::Unbiased);

/// Known-variance GLR with the noise variances supplied. Requires
/// yhat_a >= yhat_b - delta, otherwise throws PreconditionError.
double glr_closed_form_known_variance(const LinearState& state, ContextId x, ActionId a, ActionId b,
                                      double delta, double var_a, double var_b);

/// Signed log-likelihood ratio sign(yhat_a - yhat_b + delta) * quadratic form,
/// defined for either ordering. Antisymmetric in (a, b) at delta = 0.
double glr_known_variance_signed(const LinearState& state, ContextId x, ActionId a, ActionId b,
                                 double delta, double var_a, double var_b);

/// [sqrt(2 phi (S_a^2 Sigma(x,a) + S_b^2 Sigma(x,b))) - (yhat_a - yhat_b)]_+.
double certified_slack_linear(const LinearState& state, ContextId x, ActionId a, ActionId b,
                              BoundaryValue phi, VarianceDivisor divisor = VarianceDivisor::Unbiased);

ContextOutcome evaluate_context_linear(const LinearState& state, const ErrorBudget& budget, ContextId x,
                                       double delta, const RuleOptions& options = {});

/// Continue until t0; afterwards as the unstructured P1 rule with boundary_linear.
StopDecision check_stop_p1_linear(const LinearState& state, const ErrorBudget& budget, double delta,
                                  const RuleOptions& options = {});

StopDecision check_stop_p2_linear(const LinearState& state, const ErrorBudget& budget, double delta,
                                  const RuleOptions& options = {});

}  // namespace glrstop
