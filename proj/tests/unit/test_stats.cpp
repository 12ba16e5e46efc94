#include "glrstop/errors.hpp"
#include "glrstop/rng.hpp"
#include "glrstop/stats.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

using namespace glrstop;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

PairStats feed(std::initializer_list<double> ys) {
  PairStats s;
  for (double y : ys) s = update_pair(s, y);
  return s;
}

LinearActionStats feed_linear(std::size_t d, const std::vector<std::pair<Eigen::VectorXd, double>>& rows) {
  LinearActionStats s(d);
  for (const auto& [f, y] : rows) s.accumulate(f, y);
  return s;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  std::size_t i = 0;
  for (double x : v) out[static_cast<Eigen::Index>(i++)] = x;
  return out;
}

std::vector<Context> two_contexts() {
  return {{"x1", vec({1.0}), 0.5, {ActionId{0}, ActionId{1}}}, {"x2", vec({2.0}), 0.5, {ActionId{1}}}};
}

}  // namespace

TEST_CASE("single observation") {
  const auto s = feed({1.0});
  CHECK(s.n == 1);
  CHECK(s.mean == 1.0);
  CHECK(s.m2 == 0.0);
  CHECK(std::isnan(s.variance()));
}

TEST_CASE("three observations give mean 2 and variance 1") {
  const auto s = feed({1.0, 2.0, 3.0});
  CHECK(s.n == 3);
  CHECK_THAT(s.mean, WithinAbs(2.0, 1e-15));
  CHECK_THAT(s.variance(), WithinAbs(1.0, 1e-15));
  CHECK_THAT(s.variance(VarianceDivisor::MaximumLikelihood), WithinAbs(2.0 / 3.0, 1e-15));
}

TEST_CASE("constant stream has zero variance") {
  CHECK(feed({5.0, 5.0, 5.0, 5.0}).variance() == 0.0);
}

TEST_CASE("streaming moments match two-pass batch values") {
  Rng rng = substream(7, 0);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (std::size_t n : {2u, 17u, 1000u, 10000u}) {
    std::vector<double> ys(n);
    for (auto& y : ys) y = u(rng);
    PairStats s;
    for (double y : ys) s = update_pair(s, y);
    const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double y : ys) ss += (y - mean) * (y - mean);
    CHECK_THAT(s.mean, WithinRel(mean, 1e-9) || WithinAbs(mean, 1e-6));
    CHECK_THAT(s.variance(), WithinRel(ss / static_cast<double>(n - 1), 1e-9));
  }
}

TEST_CASE("one-dimensional least squares by hand") {
  const auto s = feed_linear(1, {{vec({1.0}), 2.0}, {vec({1.0}), 2.0}});
  CHECK(s.gram(0, 0) == 2.0);
  CHECK(s.moment[0] == 4.0);
  const auto sol = ols_solution(s);
  REQUIRE(sol.solved);
  CHECK_THAT(sol.beta_hat[0], WithinAbs(2.0, 1e-15));

  const auto t = feed_linear(1, {{vec({1.0}), 1.0}, {vec({1.0}), 3.0}});
  const auto sol_t = ols_solution(t);
  REQUIRE(sol_t.solved);
  CHECK_THAT(sol_t.beta_hat[0], WithinAbs(2.0, 1e-15));
  CHECK_THAT(sol_t.s2, WithinAbs(2.0, 1e-12));
}

TEST_CASE("accumulate rejects a wrong-length feature vector") {
  LinearActionStats s(2);
  CHECK_THROWS_AS(s.accumulate(vec({1.0}), 1.0), ConfigError);
  CHECK_THROWS_AS(update_linear(s, vec({1.0, 2.0, 3.0}), 1.0), ConfigError);
}

TEST_CASE("collinear features leave the fit undefined") {
  const auto s = feed_linear(2, {{vec({1.0, 2.0}), 1.0}, {vec({2.0, 4.0}), 2.0}, {vec({-1.0, -2.0}), 0.5}});
  CHECK_FALSE(ols_solution(s).solved);
  CHECK_FALSE(OlsFactor(s).positive_definite());
  CHECK_THROWS_AS(directional_variance(s, vec({1.0, 0.0})), NotReady);
}

TEST_CASE("zero degrees of freedom is not solved") {
  const auto s = feed_linear(2, {{vec({1.0, 0.0}), 1.0}, {vec({0.0, 1.0}), 2.0}});
  const OlsFactor factor(s);
  CHECK(factor.positive_definite());
  CHECK_FALSE(factor.ready());
  CHECK_FALSE(ols_solution(s).solved);
}

TEST_CASE("noiseless spanning design recovers the coefficients") {
  Rng rng = substream(11, 0);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Vector3d beta(u(rng), u(rng), u(rng));
    LinearActionStats s(3);
    for (int i = 0; i < 12; ++i) {
      const Eigen::Vector3d f(1.0, u(rng), u(rng));
      s.accumulate(f, f.dot(beta));
    }
    const auto sol = ols_solution(s);
    REQUIRE(sol.solved);
    CHECK((sol.beta_hat - beta).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(sol.s2 >= 0.0);
    CHECK(sol.s2 < 1e-12);
  }
}

TEST_CASE("directional variance by hand") {
  LinearActionStats id(2);
  id.gram = Eigen::Matrix2d::Identity();
  id.n = 2;
  CHECK_THAT(directional_variance(id, vec({1.0, 0.0})), WithinAbs(1.0, 1e-15));

  LinearActionStats four(2);
  four.gram = 4.0 * Eigen::Matrix2d::Identity();
  four.n = 4;
  CHECK_THAT(directional_variance(four, vec({1.0, 1.0})), WithinAbs(0.5, 1e-15));
  CHECK(directional_variance(four, vec({0.0, 0.0})) == 0.0);
}

TEST_CASE("directional variance never grows with more data") {
  Rng rng = substream(13, 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LinearActionStats s(3);
  const Eigen::Vector3d f(1.0, 0.3, 0.7);
  double previous = HUGE_VAL;
  for (int i = 0; i < 200; ++i) {
    s.accumulate(Eigen::Vector3d(1.0, u(rng), u(rng)), u(rng));
    if (!OlsFactor(s).positive_definite()) continue;
    const double sigma = directional_variance(s, f);
    CHECK(sigma <= previous * (1.0 + 1e-12));
    previous = sigma;
  }
}

TEST_CASE("linear statistics do not depend on observation order") {
  Rng rng = substream(17, 0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::pair<Eigen::VectorXd, double>> rows;
  for (int i = 0; i < 50; ++i) rows.emplace_back(vec({1.0, u(rng), u(rng)}), u(rng));
  const auto forward = feed_linear(3, rows);
  std::shuffle(rows.begin(), rows.end(), rng);
  const auto shuffled = feed_linear(3, rows);
  CHECK((forward.gram - shuffled.gram).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((forward.moment - shuffled.moment).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THAT(forward.yy, WithinAbs(shuffled.yy, 1e-12));
}

TEST_CASE("residual sum is clamped at zero") {
  LinearActionStats s(1);
  for (int i = 0; i < 5; ++i) s.accumulate(vec({0.1}), 0.1 * 3.0);
  const auto sol = ols_solution(s);
  REQUIRE(sol.solved);
  CHECK(sol.s2 >= 0.0);
}

TEST_CASE("context space validation") {
  CHECK_NOTHROW(ContextSpace({"a", "b"}, two_contexts(), 1));

  auto dup = two_contexts();
  dup[1].name = "x1";
  CHECK_THROWS_AS(ContextSpace({"a", "b"}, dup, 1), ConfigError);

  CHECK_THROWS_AS(ContextSpace({"a", "a"}, two_contexts(), 1), ConfigError);

  auto bad_p = two_contexts();
  bad_p[0].probability = 0.6;
  CHECK_THROWS_AS(ContextSpace({"a", "b"}, bad_p, 1), ConfigError);

  auto zero_p = two_contexts();
  zero_p[0].probability = 0.0;
  zero_p[1].probability = 1.0;
  CHECK_THROWS_AS(ContextSpace({"a", "b"}, zero_p, 1), ConfigError);

  auto empty_a = two_contexts();
  empty_a[1].feasible.clear();
  CHECK_THROWS_AS(ContextSpace({"a", "b"}, empty_a, 1), ConfigError);

  auto unknown = two_contexts();
  unknown[1].feasible = {ActionId{5}};
  CHECK_THROWS_AS(ContextSpace({"a", "b"}, unknown, 1), ConfigError);

  CHECK_THROWS_AS(ContextSpace({"a", "b"}, two_contexts(), 2), ConfigError);

  const ContextSpace space({"a", "b"}, two_contexts(), 1);
  CHECK(space.feasible(ContextId{0}, ActionId{0}));
  CHECK_FALSE(space.feasible(ContextId{1}, ActionId{0}));
  CHECK(space.find_context("x2")->index == 1);
  CHECK_FALSE(space.find_action("c").has_value());
}
