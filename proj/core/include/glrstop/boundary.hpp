#pragma once

// Time-uniform critical values for the plug-in GLR statistics.
//
// gamma(t, alpha) is finite only once rho(t, alpha) > 0; before that the
// boundary is +inf and nothing can be certified. All powers are evaluated in
// log space so counts up to 2^63 - 1 are safe.

#include "glrstop/stats.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace glrstop {

/// Extended-real boundary value; +inf means "inactive".
struct BoundaryValue {
  double value = 0.0;

  bool active() const { return std::isfinite(value); }
  static BoundaryValue inactive() { return {HUGE_VAL}; }
};

enum class Criterion { P1, P2 };

namespace boundary {

/// (alpha^2 / (t+1))^{1/t} (t+1) - 1
double rho(std::uint64_t t, double alpha);

/// t^2 / rho - t, or +inf while rho <= 0.
double gamma(std::uint64_t t, double alpha);

/// (alpha^2 / (t2+1))^{1/(t1-d+1)} (t2+1) - 1. Throws NotReady when t1 <= d.
double rho_l(std::uint64_t t1, double t2, double alpha, std::size_t d);

/// (t1-d) t2 / rho_l - (t1-d), or +inf while rho_l <= 0.
/// Throws NotReady when t1 <= d.
double gamma_l(std::uint64_t t1, double t2, double alpha, std::size_t d);

/// 2 ln(1/alpha) + ln(t+1): the large-t limit of an active gamma.
double asymptotic_reference(double t, double alpha);

}  // namespace boundary

/// Per-context share of the overall error probability alpha.
/// Contexts with a single feasible action consume nothing and hold nullopt.
struct ErrorBudget {
  Criterion criterion = Criterion::P1;
  double alpha = 0.05;
  std::vector<std::optional<double>> per_context;

  std::optional<double> for_context(ContextId x) const { return per_context.at(x.index); }
};

/// P1: alpha / ((|A(x)|-1) m p(x)); P2: alpha / ((|A(x)|-1) m).
/// Throws ConfigError when alpha is outside (0,1) or any share is >= 1.
ErrorBudget make_budget(const ContextSpace& space, Criterion criterion, double alpha);

/// max{ gamma(n_a, b/sqrt(n_b+1)), gamma(n_b, b/sqrt(n_a+1)) } / 2.
/// Throws ConfigError if the scaled budget is not in (0,1), NotReady if a count is 0.
BoundaryValue boundary_unstructured(std::uint64_t n_a, std::uint64_t n_b, double budget);

/// Linear analogue; sig_inv_* are the directional information values
/// 1 / Sigma_t(x, .). Throws NotReady if a count is <= d.
BoundaryValue boundary_linear(std::uint64_t n_a, double sig_inv_a, std::uint64_t n_b, double sig_inv_b,
                              double budget, std::size_t d);

}  // namespace glrstop
