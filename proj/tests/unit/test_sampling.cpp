#include "glrstop/environments.hpp"
#include "glrstop/errors.hpp"
#include "glrstop/sampling.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>

using namespace glrstop;

namespace {

std::shared_ptr<const ContextSpace> grid(std::size_t m, std::size_t k) {
  std::vector<std::string> actions;
  std::vector<ActionId> all;
  for (std::size_t a = 0; a < k; ++a) {
    actions.push_back("a" + std::to_string(a));
    all.push_back(ActionId{a});
  }
  std::vector<Context> contexts;
  for (std::size_t i = 0; i < m; ++i) {
    contexts.push_back({"x" + std::to_string(i), Eigen::VectorXd::Ones(1), 1.0 / static_cast<double>(m), all});
  }
  return std::make_shared<const ContextSpace>(actions, contexts, 1);
}

}  // namespace

TEST_CASE("equal allocation covers every pair once per cycle") {
  auto space = grid(4, 3);
  UnstructuredState state(space);
  EqualAllocation ea(*space, {2, {}});
  Rng rng = substream(1, 0);
  for (std::size_t t = 0; t < 12; ++t) {
    const auto d = ea.next_pair(state, rng);
    state.record(d.context, d.action, 0.0);
  }
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t a = 0; a < 3; ++a) CHECK(state.stats(ContextId{i}, ActionId{a}).n == 1);
  }
  CHECK_FALSE(ea.warmed_up());
  for (std::size_t t = 0; t < 12; ++t) ea.next_pair(state, rng);
  CHECK(ea.warmed_up());
}

TEST_CASE("equal allocation is deterministic in the stage") {
  auto space = grid(3, 4);
  UnstructuredState state(space);
  EqualAllocation a(*space);
  EqualAllocation b(*space);
  Rng r1 = substream(1, 0);
  Rng r2 = substream(2, 0);
  for (int t = 0; t < 100; ++t) {
    const auto da = a.next_pair(state, r1);
    const auto db = b.next_pair(state, r2);
    CHECK(da.context == db.context);
    CHECK(da.action == db.action);
  }
}

TEST_CASE("linear equal allocation gives each action t/k samples") {
  const auto env = standard_linear_env(10);
  for (bool design : {false, true}) {
    LinearState state(env.space);
    EqualAllocation ea(*env.space, {10, design ? env.design : std::vector<ContextId>{}});
    Rng rng = substream(1, 0);
    std::map<std::size_t, std::size_t> contexts_seen;
    for (std::uint64_t t = 1; t <= 400; ++t) {
      const auto d = ea.next_pair(state, rng);
      state.record(d.context, d.action, 0.0);
      ++contexts_seen[d.context.index];
      if (t % 40 == 0) {
        for (std::size_t a = 0; a < 10; ++a) CHECK(state.stats(ActionId{a}).n == t / 10);
      }
    }
    if (design) {
      CHECK(contexts_seen.size() == env.design.size());
    } else {
      CHECK(contexts_seen.size() == env.space->num_contexts());
    }
  }
}

TEST_CASE("equal allocation on online contexts rotates through feasible actions") {
  auto space = grid(2, 3);
  UnstructuredState state(space);
  EqualAllocation ea(*space, {1, {}});
  Rng rng = substream(1, 0);
  CHECK(ea.next_action(state, ContextId{1}, rng) == ActionId{0});
  CHECK(ea.next_action(state, ContextId{1}, rng) == ActionId{1});
  CHECK(ea.next_action(state, ContextId{0}, rng) == ActionId{0});
  CHECK(ea.next_action(state, ContextId{1}, rng) == ActionId{2});
  CHECK_FALSE(ea.warmed_up());
  ea.next_action(state, ContextId{0}, rng);
  ea.next_action(state, ContextId{0}, rng);
  CHECK(ea.warmed_up());
}

TEST_CASE("unknown design context is rejected") {
  auto space = grid(2, 2);
  CHECK_THROWS_AS(EqualAllocation(*space, {1, {ContextId{5}}}), ConfigError);
}

TEST_CASE("uniform random pairs follow multinomial bands") {
  auto space = grid(5, 4);
  UnstructuredState state(space);
  UniformRandom ur(*space);
  Rng rng = substream(3, 0);
  const int n = 100'000;
  std::vector<int> counts(20, 0);
  for (int t = 0; t < n; ++t) {
    const auto d = ur.next_pair(state, rng);
    ++counts[d.context.index * 4 + d.action.index];
  }
  const double p = 1.0 / 20.0;
  for (int c : counts) CHECK(std::abs(c - n * p) <= 3.0 * std::sqrt(n * p * (1.0 - p)));
}

TEST_CASE("uniform random actions stay feasible") {
  std::vector<Context> contexts{{"x0", Eigen::VectorXd::Ones(1), 0.5, {ActionId{1}, ActionId{3}}},
                                {"x1", Eigen::VectorXd::Ones(1), 0.5, {ActionId{0}}}};
  auto space = std::make_shared<const ContextSpace>(std::vector<std::string>{"a", "b", "c", "d"}, contexts, 1);
  UnstructuredState state(space);
  UniformRandom ur(*space);
  Rng rng = substream(5, 0);
  for (int i = 0; i < 1000; ++i) {
    CHECK(space->feasible(ContextId{0}, ur.next_action(state, ContextId{0}, rng)));
    const auto d = ur.next_pair(state, rng);
    CHECK(space->feasible(d.context, d.action));
  }
}

TEST_CASE("greedy challenger") {
  auto space = grid(1, 3);
  const auto budget = make_budget(*space, Criterion::P1, 0.05);
  Rng rng = substream(7, 0);

  SECTION("acts as equal allocation before warm-up") {
    UnstructuredState state(space);
    GreedyChallenger greedy(*space, budget, 0.1, VarianceDivisor::Unbiased, {2, {}});
    EqualAllocation ea(*space, {2, {}});
    for (int t = 0; t < 6; ++t) {
      const auto g = greedy.next_pair(state, rng);
      const auto e = ea.next_pair(state, rng);
      CHECK(g.action == e.action);
      state.record(g.context, g.action, 0.1 * t);
    }
  }
  SECTION("the closest, least sampled challenger gets the next sample") {
    UnstructuredState state(space);
    auto block = [&](ActionId a, double mean, int n) {
      for (int i = 0; i < n; ++i) state.record(ContextId{0}, a, mean + (i % 2 ? 1.0 : -1.0));
    };
    block(ActionId{0}, 5.0, 200);
    block(ActionId{1}, 4.9, 6);
    block(ActionId{2}, -20.0, 6);
    GreedyChallenger greedy(*space, budget, 0.0, VarianceDivisor::Unbiased, {0, {}});
    const auto d = greedy.next_pair(state, rng);
    CHECK(d.context == ContextId{0});
    CHECK(d.action == ActionId{1});
    CHECK(greedy.next_action(state, ContextId{0}, rng) == ActionId{1});
  }
  SECTION("linear decisions are feasible") {
    const auto env = standard_linear_env(3);
    const auto lin_budget = make_budget(*env.space, Criterion::P2, 0.05);
    LinearState state(env.space);
    GreedyChallenger greedy(*env.space, lin_budget, 0.5, VarianceDivisor::Unbiased, {5, env.design});
    Rng noise = substream(9, 0);
    for (int t = 0; t < 500; ++t) {
      const auto d = greedy.next_pair(state, rng);
      REQUIRE(env.space->feasible(d.context, d.action));
      state.record(d.context, d.action, env.mean(d.context, d.action) + standard_normal(noise));
    }
    CHECK(greedy.warmed_up());
    CHECK(state.all_ready());
  }
}
