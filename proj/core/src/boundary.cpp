#include "glrstop/boundary.hpp"

#include "glrstop/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace glrstop {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shared core of rho / rho_l. With L = (2 ln a - ln(s+1)) / e:
//   rho     = (s+1) e^L - 1 = (s+1) expm1(L) + s
//   s - rho = -(s+1) expm1(L)
// The second form keeps gamma accurate when rho is within a few units of s.
struct RhoParts {
  double rho;
  double s_minus_rho;
};

RhoParts rho_parts(double s, double exponent, double alpha) {
  const double log_s1 = std::log1p(s);
  const double l = (2.0 * std::log(alpha) - log_s1) / exponent;
  const double em1 = std::expm1(l);
  const double s1 = s + 1.0;
  return {s1 * em1 + s, -s1 * em1};
}

void check_alpha(double alpha, const char* where) {
  if (!(alpha > 0.0) || !(alpha <= 1.0)) {
    throw ConfigError(std::string(where) + ": alpha must lie in (0, 1]");
  }
}

}  // namespace

namespace boundary {

double rho(std::uint64_t t, double alpha) {
  if (t == 0) throw NotReady("rho: t must be >= 1");
  check_alpha(alpha, "rho");
  const double td = static_cast<double>(t);
  return rho_parts(td, td, alpha).rho;
}

double gamma(std::uint64_t t, double alpha) {
  if (t == 0) throw NotReady("gamma: t must be >= 1");
  check_alpha(alpha, "gamma");
  const double td = static_cast<double>(t);
  const auto parts = rho_parts(td, td, alpha);
  if (!(parts.rho > 0.0)) return kInf;
  return td * parts.s_minus_rho / parts.rho;
}

double rho_l(std::uint64_t t1, double t2, double alpha, std::size_t d) {
  if (t1 <= d) throw NotReady("rho_l: need t1 > d");
  if (!(t2 > 0.0)) throw ConfigError("rho_l: t2 must be positive");
  check_alpha(alpha, "rho_l");
  const double exponent = static_cast<double>(t1 - d) + 1.0;
  return rho_parts(t2, exponent, alpha).rho;
}

double gamma_l(std::uint64_t t1, double t2, double alpha, std::size_t d) {
  if (t1 <= d) throw NotReady("gamma_l: need t1 > d");
  if (!(t2 > 0.0)) throw ConfigError("gamma_l: t2 must be positive");
  check_alpha(alpha, "gamma_l");
  if (std::isinf(t2)) return kInf;
  const double dof = static_cast<double>(t1 - d);
  const auto parts = rho_parts(t2, dof + 1.0, alpha);
  if (!(parts.rho > 0.0)) return kInf;
  // (t1-d) t2 / rho - (t1-d) = (t1-d) (t2 - rho) / rho
  return dof * parts.s_minus_rho / parts.rho;
}

double asymptotic_reference(double t, double alpha) {
  check_alpha(alpha, "asymptotic_reference");
  return 2.0 * std::log(1.0 / alpha) + std::log1p(t);
}

}  // namespace boundary

ErrorBudget make_budget(const ContextSpace& space, Criterion criterion, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("budget: alpha must lie in (0, 1)");
  ErrorBudget budget;
  budget.criterion = criterion;
  budget.alpha = alpha;
  budget.per_context.resize(space.num_contexts());
  const double m = static_cast<double>(space.num_contexts());
  for (std::size_t i = 0; i < space.num_contexts(); ++i) {
    const auto& c = space.contexts()[i];
    if (c.feasible.size() < 2) continue;
    const double comparisons = static_cast<double>(c.feasible.size() - 1);
    const double share = criterion == Criterion::P1 ? alpha / (comparisons * m * c.probability)
                                                    : alpha / (comparisons * m);
    if (!(share < 1.0)) {
      throw ConfigError("budget: context '" + c.name + "' receives error share " + std::to_string(share) +
                        " >= 1; the guarantee would be void");
    }
    budget.per_context[i] = share;
  }
  return budget;
}

BoundaryValue boundary_unstructured(std::uint64_t n_a, std::uint64_t n_b, double budget) {
  if (n_a == 0 || n_b == 0) throw NotReady("boundary: both counts must be >= 1");
  const double scale = budget * std::sqrt(1.0 / (static_cast<double>(std::min(n_a, n_b)) + 1.0));
  if (!(budget > 0.0) || !(scale < 1.0)) throw ConfigError("boundary: scaled budget outside (0, 1)");
  const double g_a = boundary::gamma(n_a, budget / std::sqrt(static_cast<double>(n_b) + 1.0));
  if (std::isinf(g_a)) return BoundaryValue::inactive();
  const double g_b = boundary::gamma(n_b, budget / std::sqrt(static_cast<double>(n_a) + 1.0));
  return {0.5 * std::max(g_a, g_b)};
}

BoundaryValue boundary_linear(std::uint64_t n_a, double sig_inv_a, std::uint64_t n_b, double sig_inv_b,
                              double budget, std::size_t d) {
  if (n_a <= d || n_b <= d) throw NotReady("boundary: both counts must exceed d");
  if (!(sig_inv_a > 0.0) || !(sig_inv_b > 0.0)) throw ConfigError("boundary: information must be positive");
  if (!(budget > 0.0) || !(budget * std::sqrt(1.0 / (std::min(sig_inv_a, sig_inv_b) + 1.0)) < 1.0)) {
    throw ConfigError("boundary: scaled budget outside (0, 1)");
  }
  const double g_a = boundary::gamma_l(n_a, sig_inv_a, budget / std::sqrt(sig_inv_b + 1.0), d);
  if (std::isinf(g_a)) return BoundaryValue::inactive();
  const double g_b = boundary::gamma_l(n_b, sig_inv_b, budget / std::sqrt(sig_inv_a + 1.0), d);
  return {0.5 * std::max(g_a, g_b)};
}

}  // namespace glrstop
