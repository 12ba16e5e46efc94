#include "glrstop/stats.hpp"

#include "glrstop/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace glrstop {

ContextSpace::ContextSpace(std::vector<std::string> action_names, std::vector<Context> contexts,
                           std::size_t dimension)
    : actions_(std::move(action_names)), contexts_(std::move(contexts)), dimension_(dimension) {
  if (dimension_ == 0) throw ConfigError("context space: dimension must be positive");
  if (actions_.empty()) throw ConfigError("context space: no actions");
  if (contexts_.empty()) throw ConfigError("context space: no contexts");

  std::set<std::string_view> seen;
  for (const auto& name : actions_) {
    if (!seen.insert(name).second) throw ConfigError("context space: duplicate action id '" + name + "'");
  }
  seen.clear();

  const std::size_t k = actions_.size();
  feasible_mask_.assign(contexts_.size() * k, 0);
  double total = 0.0;
  for (std::size_t i = 0; i < contexts_.size(); ++i) {
    auto& c = contexts_[i];
    if (!seen.insert(c.name).second) throw ConfigError("context space: duplicate context id '" + c.name + "'");
    if (static_cast<std::size_t>(c.features.size()) != dimension_) {
      throw ConfigError("context space: context '" + c.name + "' has feature length " +
                        std::to_string(c.features.size()) + ", expected " + std::to_string(dimension_));
    }
    if (!(c.probability > 0.0) || !std::isfinite(c.probability)) {
      throw ConfigError("context space: context '" + c.name + "' needs p(x) > 0");
    }
    if (c.feasible.empty()) throw ConfigError("context space: context '" + c.name + "' has no feasible action");
    std::sort(c.feasible.begin(), c.feasible.end());
    if (std::adjacent_find(c.feasible.begin(), c.feasible.end()) != c.feasible.end()) {
      throw ConfigError("context space: context '" + c.name + "' lists an action twice");
    }
    for (ActionId a : c.feasible) {
      if (a.index >= k) throw ConfigError("context space: context '" + c.name + "' references unknown action");
      feasible_mask_[i * k + a.index] = 1;
    }
    total += c.probability;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ConfigError("context space: probabilities sum to " + std::to_string(total) + ", not 1");
  }
}

bool ContextSpace::feasible(ContextId x, ActionId a) const {
  if (x.index >= contexts_.size() || a.index >= actions_.size()) return false;
  return feasible_mask_[x.index * actions_.size() + a.index] != 0;
}

std::optional<ContextId> ContextSpace::find_context(std::string_view name) const {
  for (std::size_t i = 0; i < contexts_.size(); ++i) {
    if (contexts_[i].name == name) return ContextId{i};
  }
  return std::nullopt;
}

std::optional<ActionId> ContextSpace::find_action(std::string_view name) const {
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    if (actions_[i] == name) return ActionId{i};
  }
  return std::nullopt;
}

double PairStats::variance(VarianceDivisor divisor) const {
  const double denom = divisor == VarianceDivisor::Unbiased ? static_cast<double>(n) - 1.0
                                                            : static_cast<double>(n);
  if (denom <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return m2 / denom;
}

PairStats update_pair(PairStats stats, double y) {
  stats.n += 1;
  const double delta = y - stats.mean;
  stats.mean += delta / static_cast<double>(stats.n);
  stats.m2 += delta * (y - stats.mean);
  if (stats.m2 < 0.0) stats.m2 = 0.0;
  return stats;
}

LinearActionStats::LinearActionStats(std::size_t dimension)
    : gram(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dimension), static_cast<Eigen::Index>(dimension))),
      moment(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension))) {}

void LinearActionStats::accumulate(const Eigen::Ref<const Eigen::VectorXd>& f, double y) {
  if (f.size() != moment.size()) {
    throw ConfigError("linear stats: feature length " + std::to_string(f.size()) + " != dimension " +
                      std::to_string(moment.size()));
  }
  gram.selfadjointView<Eigen::Lower>().rankUpdate(f);
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  moment += y * f;
  yy += y * y;
  n += 1;
}

LinearActionStats update_linear(LinearActionStats stats, const Eigen::Ref<const Eigen::VectorXd>& f,
                                double y) {
  stats.accumulate(f, y);
  return stats;
}

OlsFactor::OlsFactor(const LinearActionStats& stats) {
  const auto d = stats.gram.rows();
  if (d == 0) return;
  const double trace = stats.gram.trace();
  if (!(trace > 0.0)) return;
  ldlt_.compute(stats.gram);
  if (ldlt_.info() != Eigen::Success) return;
  const double min_pivot = ldlt_.vectorD().minCoeff();
  positive_definite_ = min_pivot > 1e-10 * trace / static_cast<double>(d);
  if (!positive_definite_ || stats.n < static_cast<std::uint64_t>(d) + 1) return;

  solution_.beta_hat = ldlt_.solve(stats.moment);
  const double rss = stats.yy - stats.moment.dot(solution_.beta_hat);
  solution_.s2 = std::max(0.0, rss) / static_cast<double>(stats.n - static_cast<std::uint64_t>(d));
  solution_.solved = true;
  ready_ = true;
}

double OlsFactor::directional_variance(const Eigen::Ref<const Eigen::VectorXd>& f) const {
  if (!positive_definite_) throw NotReady("directional variance: Gram matrix is not positive definite");
  const Eigen::VectorXd z = ldlt_.solve(f);
  return std::max(0.0, f.dot(z));
}

OlsSolution ols_solution(const LinearActionStats& stats) { return OlsFactor(stats).solution(); }

double directional_variance(const LinearActionStats& stats, const Eigen::Ref<const Eigen::VectorXd>& f) {
  if (f.size() != static_cast<Eigen::Index>(stats.dimension())) {
    throw ConfigError("directional variance: feature length mismatch");
  }
  return OlsFactor(stats).directional_variance(f);
}

}  // namespace glrstop
