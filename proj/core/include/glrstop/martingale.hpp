#pragma once

// Mixture martingales behind the boundary calibrations, and oracles used to
// validate them. Test support only; the stopping rules never call into here.

#include "glrstop/rng.hpp"
#include "glrstop/stats.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace glrstop {

struct MartingalePath {
  std::vector<double> values;    // G at stages first_stage, first_stage + 1, ...
  std::uint64_t first_stage = 1;
  bool guarded = false;          // some value used the zero-deviation limit
};

/// G_t = sqrt(s^2/(t+s^2)) (1 - (R_t - t mu)^2 / ((t+s^2) sum (Y - mu)^2))^(-t/2)
/// for every prefix. All samples equal to mu give the limit sqrt(s^2/(t+s^2)).
/// Throws DegenerateError if sum (Y - mu)^2 = 0 with a nonzero deviation
/// (cannot happen) and ConfigError for an empty sample or s <= 0.
MartingalePath gaussian_mixture_martingale(std::span<const double> samples, double mu, double s = 1.0);

/// Single-stage value of the unstructured martingale from summary data:
/// n, deviation sum (R - n mu) and sum (Y - mu)^2.
double gaussian_mixture_value(std::uint64_t n, double deviation_sum, double centered_ss, double s = 1.0);

/// G^L_t for the OLS fit of the stream (features[i], y[i]) along direction f,
/// emitted from the first stage with n >= d + 1 and a positive definite Gram
/// matrix. A zero-residual, zero-deviation stage uses the limit
/// sqrt(s^2/(s^2 + 1/Sigma)) and marks the path guarded.
MartingalePath linear_mixture_martingale(std::span<const Eigen::VectorXd> features, std::span<const double> y,
                                         const Eigen::VectorXd& f, const Eigen::VectorXd& beta_true, double s = 1.0);

/// Single-stage value from (n, d, S^2 with divisor n - d, directional
/// deviation f^T (beta_hat - beta), information 1/Sigma).
double linear_mixture_value(std::uint64_t n, std::size_t d, double s2, double deviation, double info,
                            double s = 1.0);

/// Elementwise product of two paths of equal length.
MartingalePath product_path(const MartingalePath& a, const MartingalePath& b);

/// Fraction of generated paths whose running maximum reaches threshold.
double ville_violation_rate(const std::function<MartingalePath(Rng&)>& path_generator, double threshold,
                            std::uint64_t reps, std::uint64_t seed);

/// E[G_t] for the unstructured martingale with s = 1, by quadrature over the
/// Beta(1/2, (t-1)/2) law of n (Ybar - mu)^2 / sum (Y - mu)^2.
double gaussian_mixture_expectation(std::uint64_t t);

/// Two linear samples with known noise variances, for the constrained-MLE
/// oracle. Rows of features_* are the regressors.
struct TwoSampleLinearData {
  Eigen::MatrixXd features_a;
  Eigen::VectorXd y_a;
  Eigen::MatrixXd features_b;
  Eigen::VectorXd y_b;
  double var_a = 1.0;
  double var_b = 1.0;
};

/// log( max_{f'b_a >= f'b_b - delta} L / max_{f'b_a <= f'b_b - delta} L ) computed
/// from the raw data: the unconstrained fit on one side and the
/// equality-constrained fit f'b_a - f'b_b = -delta (KKT system) on the other.
double constrained_glr_oracle(const TwoSampleLinearData& data, const Eigen::VectorXd& f, double delta);

}  // namespace glrstop
