#include "glrstop/martingale.hpp"

#include "glrstop/errors.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>

namespace glrstop {

double gaussian_mixture_value(std::uint64_t n, double deviation_sum, double centered_ss, double s) {
  if (n == 0) throw ConfigError("mixture martingale: need at least one sample");
  if (!(s > 0.0)) throw ConfigError("mixture martingale: s must be positive");
  const double t = static_cast<double>(n);
  const double s2 = s * s;
  const double lead = std::sqrt(s2 / (t + s2));
  if (deviation_sum == 0.0) return lead;
  if (!(centered_ss > 0.0)) throw DegenerateError("mixture martingale: zero spread with nonzero deviation");
  const double ratio = deviation_sum * deviation_sum / ((t + s2) * centered_ss);
  return lead * std::exp(-0.5 * t * std::log1p(-ratio));
}

MartingalePath gaussian_mixture_martingale(std::span<const double> samples, double mu, double s) {
  if (samples.empty()) throw ConfigError("mixture martingale: need at least one sample");
  MartingalePath path;
  path.values.reserve(samples.size());
  double dev = 0.0;
  double ss = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double e = samples[i] - mu;
    dev += e;
    ss += e * e;
    if (dev == 0.0) path.guarded = true;
    path.values.push_back(gaussian_mixture_value(i + 1, dev, ss, s));
  }
  return path;
}

double linear_mixture_value(std::uint64_t n, std::size_t d, double s2, double deviation, double info, double s) {
  if (n <= d) throw NotReady("linear mixture martingale: need n > d");
  if (!(s > 0.0)) throw ConfigError("linear mixture martingale: s must be positive");
  if (!(info > 0.0)) throw ConfigError("linear mixture martingale: information must be positive");
  const double sq = s * s;
  const double dof = static_cast<double>(n - d);
  const double lead = std::sqrt(sq / (sq + info));
  const double dev2 = deviation * deviation;
  const double base = (sq + info) * dof * s2;
  const double num = base + sq * dev2 * info;
  const double den = base + (sq + info) * info * dev2;
  if (!(den > 0.0)) return lead;  // zero residuals and zero deviation: 0/0
  return lead * std::exp(-0.5 * (dof + 1.0) * std::log(num / den));
}

MartingalePath linear_mixture_martingale(std::span<const Eigen::VectorXd> features, std::span<const double> y,
                                         const Eigen::VectorXd& f, const Eigen::VectorXd& beta_true, double s) {
  if (features.size() != y.size()) throw ConfigError("linear mixture martingale: features and y differ in length");
  const std::size_t d = static_cast<std::size_t>(f.size());
  if (static_cast<std::size_t>(beta_true.size()) != d) throw ConfigError("linear mixture martingale: beta length");
  LinearActionStats stats(d);
  MartingalePath path;
  for (std::size_t i = 0; i < y.size(); ++i) {
    stats.accumulate(features[i], y[i]);
    const OlsFactor factor(stats);
    if (!factor.ready()) {
      if (!path.values.empty()) throw DegenerateError("linear mixture martingale: fit lost readiness");
      continue;
    }
    if (path.values.empty()) path.first_stage = i + 1;
    const auto& sol = factor.solution();
    const double deviation = f.dot(sol.beta_hat - beta_true);
    const double info = 1.0 / factor.directional_variance(f);
    if (sol.s2 == 0.0 && deviation == 0.0) path.guarded = true;
    path.values.push_back(linear_mixture_value(stats.n, d, sol.s2, deviation, info, s));
  }
  return path;
}

MartingalePath product_path(const MartingalePath& a, const MartingalePath& b) {
  if (a.values.size() != b.values.size()) throw ConfigError("product path: lengths differ");
  MartingalePath out;
  out.first_stage = std::max(a.first_stage, b.first_stage);
  out.guarded = a.guarded || b.guarded;
  out.values.resize(a.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i) out.values[i] = a.values[i] * b.values[i];
  return out;
}

double ville_violation_rate(const std::function<MartingalePath(Rng&)>& path_generator, double threshold,
                            std::uint64_t reps, std::uint64_t seed) {
  if (!(threshold > 1.0)) throw ConfigError("ville: threshold must exceed 1");
  if (reps == 0) throw ConfigError("ville: need at least one replication");
  std::uint64_t hits = 0;
  for (std::uint64_t r = 0; r < reps; ++r) {
    Rng rng = substream(seed, r);
    const auto path = path_generator(rng);
    if (std::any_of(path.values.begin(), path.values.end(), [&](double g) { return g >= threshold; })) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(reps);
}

double gaussian_mixture_expectation(std::uint64_t t) {
  if (t == 0) throw ConfigError("expectation: t must be >= 1");
  if (t == 1) return 1.0;  // G_1 = 1 identically for s = 1
  const double n = static_cast<double>(t);
  const double a = 0.5;
  const double b = 0.5 * (n - 1.0);
  const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  auto integrand = [&](double z, double xc) {
    // on the right half xc = 1 - z to full precision; on the left it is -z
    const double zc = xc > 0.0 ? xc : 1.0 - z;
    if (z <= 0.0 || zc <= 0.0) return 0.0;
    const double log_g = -0.5 * std::log(n + 1.0) - 0.5 * n * std::log1p(-n * z / (n + 1.0));
    const double log_pdf = (a - 1.0) * std::log(z) + (b - 1.0) * std::log(zc) - log_beta;
    return std::exp(log_g + log_pdf);
  };
  boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(integrand, 0.0, 1.0);
}

double constrained_glr_oracle(const TwoSampleLinearData& data, const Eigen::VectorXd& f, double delta) {
  const Eigen::Index d = f.size();
  if (data.features_a.cols() != d || data.features_b.cols() != d) throw ConfigError("oracle: dimension mismatch");
  if (!(data.var_a > 0.0) || !(data.var_b > 0.0)) throw ConfigError("oracle: variances must be positive");

  // Q(b_a, b_b) = |y_a - F_a b_a|^2 / (2 var_a) + |y_b - F_b b_b|^2 / (2 var_b)
  const Eigen::MatrixXd ha = data.features_a.transpose() * data.features_a / data.var_a;
  const Eigen::MatrixXd hb = data.features_b.transpose() * data.features_b / data.var_b;
  const Eigen::VectorXd ga = data.features_a.transpose() * data.y_a / data.var_a;
  const Eigen::VectorXd gb = data.features_b.transpose() * data.y_b / data.var_b;
  auto objective = [&](const Eigen::VectorXd& ba, const Eigen::VectorXd& bb) {
    return 0.5 * (data.y_a - data.features_a * ba).squaredNorm() / data.var_a +
           0.5 * (data.y_b - data.features_b * bb).squaredNorm() / data.var_b;
  };

  const Eigen::VectorXd ua = ha.fullPivLu().solve(ga);
  const Eigen::VectorXd ub = hb.fullPivLu().solve(gb);

  // [H_a 0 f; 0 H_b -f; f' -f' 0] [b_a; b_b; lambda] = [g_a; g_b; -delta]
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(2 * d + 1, 2 * d + 1);
  kkt.topLeftCorner(d, d) = ha;
  kkt.block(d, d, d, d) = hb;
  kkt.block(0, 2 * d, d, 1) = f;
  kkt.block(d, 2 * d, d, 1) = -f;
  kkt.block(2 * d, 0, 1, d) = f.transpose();
  kkt.block(2 * d, d, 1, d) = -f.transpose();
  Eigen::VectorXd rhs(2 * d + 1);
  rhs << ga, gb, -delta;
  const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
  const double constrained = objective(sol.head(d), sol.segment(d, d));
  const double free = objective(ua, ub);

  // the unconstrained fit lies on the side it certifies; the other side's
  // maximum sits on the boundary
  const double gap = f.dot(ua) - f.dot(ub) + delta;
  const double magnitude = constrained - free;
  return gap >= 0.0 ? magnitude : -magnitude;
}

}  // namespace glrstop
