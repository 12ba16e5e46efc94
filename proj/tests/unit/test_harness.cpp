#include "glrstop/boundary.hpp"
#include "glrstop/errors.hpp"
#include "glrstop/harness.hpp"

#include <catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <sstream>

using namespace glrstop;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using nlohmann::json;

namespace {

std::shared_ptr<const Environment> two_arm() {
  std::vector<Context> contexts{{"x", Eigen::VectorXd::Ones(1), 1.0, {ActionId{0}, ActionId{1}}}};
  TabularEnvironment env;
  env.name = "two_arm";
  env.space = std::make_shared<const ContextSpace>(std::vector<std::string>{"lo", "hi"}, contexts, 1);
  env.truth = {0.0, 1.0};
  env.noise_sd = {1.0, 1.0};
  return std::make_shared<const Environment>(env);
}

ExperimentConfig toy_config() {
  ExperimentConfig c;
  c.environment = std::make_shared<const Environment>(toy_env());
  c.delta = 0.3;
  c.strategy.n0 = 5;
  c.replications = 6;
  c.seed = 17;
  c.t_max = 1'000'000;
  return c;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("a huge slack stops at the first check with an active boundary") {
  ExperimentConfig c;
  c.environment = two_arm();
  c.delta = 1e6;
  c.strategy.n0 = 2;
  c.replications = 1;
  c.t_max = 10'000;
  std::uint64_t expected = 0;
  for (std::uint64_t t = 4; expected == 0; ++t) {
    if (boundary_unstructured((t + 1) / 2, t / 2, 0.05).active()) expected = t;
  }
  for (auto criterion : {Criterion::P1, Criterion::P2}) {
    c.criterion = criterion;
    const auto r = run_replication(c, 0);
    CHECK_FALSE(r.censored);
    CHECK(r.stop_time == expected);
  }
}

TEST_CASE("hitting t_max is reported as censored") {
  auto c = toy_config();
  c.t_max = 1;
  c.replications = 3;
  const auto report = run_experiment(c);
  CHECK(report.censor_count == 3);
  for (const auto& r : report.results) {
    CHECK(r.censored);
    CHECK(r.stop_time == 1);
    CHECK(r.policy.size() == 10);
  }
}

TEST_CASE("results are deterministic and independent of the worker count") {
  auto c = toy_config();
  c.criterion = Criterion::P2;
  const auto one = run_experiment(c, 1);
  const auto again = run_experiment(c, 1);
  const auto three = run_experiment(c, 3);
  REQUIRE(one.results.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(one.results[i].stop_time == again.results[i].stop_time);
    CHECK(one.results[i].stop_time == three.results[i].stop_time);
    CHECK(one.results[i].policy == three.results[i].policy);
  }
  CHECK(one.avg_ssize == three.avg_ssize);
  CHECK(run_replication(c, 4).stop_time == one.results[4].stop_time);
}

TEST_CASE("aggregate by hand") {
  ReplicationResult a;
  a.stop_time = 10;
  a.p1_indicator = 1.0;
  a.p2_indicator = 1;
  ReplicationResult b;
  b.replication = 1;
  b.stop_time = 20;
  b.censored = true;
  b.p1_indicator = 0.5;
  b.p2_indicator = 0;
  const auto report = aggregate({a, b});
  CHECK(report.replications == 2);
  CHECK(report.avg_ssize == 15.0);
  CHECK_THAT(report.std_ssize, WithinRel(std::sqrt(50.0), 1e-15));
  CHECK(report.empirical_p1 == 0.75);
  CHECK(report.empirical_p2 == 0.5);
  CHECK(report.censor_count == 1);
  CHECK(aggregate({a}).std_ssize == 0.0);
}

TEST_CASE("precision indicators") {
  const auto env = two_arm();
  CHECK(precision_indicators(*env, {ActionId{1}}, 0.0) == std::pair<double, int>{1.0, 1});
  CHECK(precision_indicators(*env, {ActionId{0}}, 0.5) == std::pair<double, int>{0.0, 0});
  CHECK(precision_indicators(*env, {ActionId{0}}, 1.0) == std::pair<double, int>{1.0, 1});
  CHECK_THROWS_AS(precision_indicators(*env, {}, 1.0), ConfigError);
}

TEST_CASE("an exhausted offline log ends the replication censored") {
  ExperimentConfig c;
  c.environment = two_arm();
  c.replications = 1;
  std::vector<std::pair<ContextId, ActionId>> log;
  for (int i = 0; i < 6; ++i) log.emplace_back(ContextId{0}, ActionId{static_cast<std::size_t>(i % 2)});
  c.source = DataSourceMode::offline(log);
  const auto r = run_replication(c, 0);
  CHECK(r.censored);
  CHECK(r.stop_time == 6);
}

TEST_CASE("results CSV") {
  auto c = toy_config();
  c.replications = 2;
  const auto report = run_experiment(c);
  std::ostringstream out;
  write_results_csv(out, c, report);
  const auto lines = lines_of(out.str());
  REQUIRE(lines.size() == 6);
  CHECK(lines[0] == "# schema=1");
  CHECK(lines[1].rfind("# config={", 0) == 0);
  CHECK(lines[2] == "kind,replication,stop_time,stop_time_std,censored,p1,p2,policy");
  CHECK(lines[3].rfind("rep,0,", 0) == 0);
  CHECK(lines[4].rfind("rep,1,", 0) == 0);
  CHECK(lines[5].rfind("summary,2,", 0) == 0);
  const auto echoed = json::parse(lines[1].substr(9));
  CHECK(echoed["criterion"] == "P1");
  CHECK(echoed["seed"] == 17);
}

TEST_CASE("boundary CSV and grid") {
  const auto grid = log_grid(100'000'000, 200);
  CHECK(grid.front() == 1);
  CHECK(grid.back() == 100'000'000);
  CHECK(std::is_sorted(grid.begin(), grid.end()));
  CHECK(std::adjacent_find(grid.begin(), grid.end()) == grid.end());
  CHECK(grid.size() > 150);
  CHECK_THROWS_AS(log_grid(10, 1), ConfigError);

  std::ostringstream out;
  emit_boundary_csv(out, {0.05, 0.005}, {4, 5, 1000});
  const auto lines = lines_of(out.str());
  REQUIRE(lines.size() == 8);
  CHECK(lines[1] == "t,alpha,gamma,asymptotic_reference");
  CHECK(lines[2].rfind("4,0.05,inf,", 0) == 0);
  CHECK(lines[3].rfind("5,0.05,89.3204670344", 0) == 0);
}

TEST_CASE("config parsing") {
  SECTION("shipped configs load") {
    const auto dir = default_data_dir() / "configs";
    const auto toy = load_config(dir / "toy_p1.json");
    CHECK(toy.criterion == Criterion::P1);
    CHECK(toy.strategy.n0 == 20);
    CHECK(toy.replications == 200);
    const auto lin = load_config(dir / "standard_linear_p2.json");
    CHECK(lin.setting == Setting::Linear);
    CHECK(lin.criterion == Criterion::P2);
    CHECK(lin.strategy.use_design);
    const auto ec = load_config(dir / "ec_case1_p1.json");
    CHECK(space_of(*ec.environment).num_actions() == 20);
  }
  SECTION("round trip through the echo") {
    json doc = {{"environment", {{"builtin", "toy"}}}, {"criterion", "P2"},       {"alpha", 0.1},
                {"delta", 0.2},                         {"t_max", 1e6},            {"variance_divisor", "ml"},
                {"check_interval", 3},                  {"strategy", "uniform_random"}};
    const auto c = parse_config(doc);
    CHECK(c.t_max == 1'000'000);
    CHECK(c.divisor == VarianceDivisor::MaximumLikelihood);
    CHECK(c.check_interval == 3);
    const auto back = parse_config(config_to_json(c));
    CHECK(back.criterion == Criterion::P2);
    CHECK(back.strategy.name == "uniform_random");
    CHECK(back.alpha == 0.1);
  }
  SECTION("errors") {
    const json base = {{"environment", {{"builtin", "toy"}}}};
    auto with = [&](const char* key, json value) {
      json d = base;
      d[key] = std::move(value);
      return d;
    };
    CHECK_THROWS_AS(parse_config(json::object()), ConfigError);
    CHECK_THROWS_AS(parse_config(with("alpha", 1.5)), ConfigError);
    CHECK_THROWS_AS(parse_config(with("delta", -1.0)), ConfigError);
    CHECK_THROWS_AS(parse_config(with("criterion", "P3")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("setting", "linear")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("strategy", "thompson")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("t_max", 0)), ConfigError);
    CHECK_THROWS_AS(parse_config(with("replications", 2.5)), ConfigError);
    CHECK_THROWS_AS(parse_config(with("variance_divisor", "n+1")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("environment", {{"builtin", "rosenbrock"}})), ConfigError);
    CHECK_THROWS_AS(parse_config(with("environment", "missing_env.json")), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
  }
}
