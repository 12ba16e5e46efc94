#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace glrstop {

struct ContextId {
  std::size_t index = 0;
  friend auto operator<=>(const ContextId&, const ContextId&) = default;
};

struct ActionId {
  std::size_t index = 0;
  friend auto operator<=>(const ActionId&, const ActionId&) = default;
};

struct Context {
  std::string name;
  Eigen::VectorXd features;
  double probability = 0.0;
  /// Feasible actions, strictly increasing by index.
  std::vector<ActionId> feasible;
};

/// Finite context set with features f(x), probabilities p(x) and feasible
/// action sets A(x). Validated on construction; immutable afterwards.
class ContextSpace {
 public:
  /// Throws ConfigError when names repeat, probabilities are not a
  /// distribution (within 1e-12), a feature vector has the wrong length, or a
  /// feasible set is empty or references an unknown action.
  ContextSpace(std::vector<std::string> action_names, std::vector<Context> contexts,
               std::size_t dimension);

  std::size_t num_contexts() const { return contexts_.size(); }
  std::size_t num_actions() const { return actions_.size(); }
  std::size_t dimension() const { return dimension_; }

  const Context& context(ContextId x) const { return contexts_.at(x.index); }
  std::span<const Context> contexts() const { return contexts_; }
  const std::string& action_name(ActionId a) const { return actions_.at(a.index); }
  std::span<const std::string> action_names() const { return actions_; }

  bool feasible(ContextId x, ActionId a) const;
  std::optional<ContextId> find_context(std::string_view name) const;
  std::optional<ActionId> find_action(std::string_view name) const;

 private:
  std::vector<std::string> actions_;
  std::vector<Context> contexts_;
  std::size_t dimension_;
  std::vector<std::uint8_t> feasible_mask_;  // m x k, row-major by context
};

/// Which divisor turns a residual sum of squares into a variance estimate.
enum class VarianceDivisor {
  Unbiased,           // n - 1 (unstructured), n - d (linear)
  MaximumLikelihood,  // n
};

/// Streaming count / mean / sum of squared deviations for one
/// (context, action) pair.
struct PairStats {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  /// S^2 with the requested divisor; NaN when the divisor would be zero.
  double variance(VarianceDivisor divisor = VarianceDivisor::Unbiased) const;
};

/// Welford update: one observation appended.
[[nodiscard]] PairStats update_pair(PairStats stats, double y);

/// Per-action least-squares sufficient statistics for the linear setting.
struct LinearActionStats {
  std::uint64_t n = 0;
  Eigen::MatrixXd gram;   // sum f f^T
  Eigen::VectorXd moment; // sum y f
  double yy = 0.0;        // sum y^2

  LinearActionStats() = default;
  explicit LinearActionStats(std::size_t dimension);

  std::size_t dimension() const { return static_cast<std::size_t>(moment.size()); }

  /// In-place rank-one accumulation. Throws ConfigError on dimension mismatch.
  void accumulate(const Eigen::Ref<const Eigen::VectorXd>& f, double y);
};

[[nodiscard]] LinearActionStats update_linear(LinearActionStats stats,
                                              const Eigen::Ref<const Eigen::VectorXd>& f,
                                              double y);

struct OlsSolution {
  Eigen::VectorXd beta_hat;
  double s2 = 0.0;
  bool solved = false;
};

/// One LDLT factorization of the Gram matrix, reused for every query against
/// the same statistics. Ready when the smallest pivot exceeds
/// 1e-10 * trace / d and n >= d + 1.
class OlsFactor {
 public:
  explicit OlsFactor(const LinearActionStats& stats);

  bool positive_definite() const { return positive_definite_; }
  bool ready() const { return ready_; }
  const OlsSolution& solution() const { return solution_; }

  /// f^T D^{-1} f through a solve against the factorization.
  /// Throws NotReady when the Gram matrix is not positive definite.
  double directional_variance(const Eigen::Ref<const Eigen::VectorXd>& f) const;

 private:
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  bool positive_definite_ = false;
  bool ready_ = false;
  OlsSolution solution_;
};

OlsSolution ols_solution(const LinearActionStats& stats);

/// Sigma_t(x, a) = f^T D^{-1} f. Throws NotReady for a singular Gram matrix.
double directional_variance(const LinearActionStats& stats,
                            const Eigen::Ref<const Eigen::VectorXd>& f);

}  // namespace glrstop
