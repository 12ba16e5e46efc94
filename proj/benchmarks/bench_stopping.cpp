#include "glrstop/boundary.hpp"
#include "glrstop/environments.hpp"
#include "glrstop/glr_linear.hpp"
#include "glrstop/glr_unstructured.hpp"
#include "glrstop/rng.hpp"

#include <benchmark/benchmark.h>

using namespace glrstop;

static void BM_Gamma(benchmark::State& state) {
  const auto t = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(boundary::gamma(t, 0.05));
}
BENCHMARK(BM_Gamma)->Arg(10)->Arg(1'000)->Arg(1'000'000)->Arg(100'000'000);

static void BM_GammaL(benchmark::State& state) {
  const auto t = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(boundary::gamma_l(t, 0.3 * static_cast<double>(t), 0.05, 3));
}
BENCHMARK(BM_GammaL)->Arg(10)->Arg(1'000)->Arg(1'000'000);

namespace {

UnstructuredState warm_toy(std::uint64_t per_pair) {
  const auto env = toy_env();
  UnstructuredState state(env.space);
  Rng rng = substream(1, 0);
  for (std::uint64_t n = 0; n < per_pair; ++n) {
    for (std::size_t i = 0; i < env.space->num_contexts(); ++i) {
      for (ActionId a : env.space->context(ContextId{i}).feasible) {
        state.record(ContextId{i}, a, env.mean(ContextId{i}, a) + env.sd(ContextId{i}, a) * standard_normal(rng));
      }
    }
  }
  return state;
}

}  // namespace

static void BM_CheckStopP1(benchmark::State& state) {
  const auto s = warm_toy(static_cast<std::uint64_t>(state.range(0)));
  const auto budget = make_budget(s.space(), Criterion::P1, 0.05);
  for (auto _ : state) benchmark::DoNotOptimize(check_stop_p1(s, budget, 0.1).stop);
}
BENCHMARK(BM_CheckStopP1)->Arg(20)->Arg(2'000);

static void BM_MonitorTouch(benchmark::State& state) {
  auto s = warm_toy(20);
  const auto budget = make_budget(s.space(), Criterion::P2, 0.05);
  UnstructuredMonitor monitor(s.space(), budget, 0.1);
  monitor.should_stop(s);
  Rng rng = substream(2, 0);
  std::size_t i = 0;
  for (auto _ : state) {
    const ContextId x{i++ % 10};
    s.record(x, ActionId{i % 10}, standard_normal(rng));
    monitor.touch(x);
    benchmark::DoNotOptimize(monitor.should_stop(s));
  }
}
BENCHMARK(BM_MonitorTouch);

static void BM_LinearRecordAndCheck(benchmark::State& state) {
  const auto env = standard_linear_env(static_cast<std::size_t>(state.range(0)));
  const auto budget = make_budget(*env.space, Criterion::P1, 0.05);
  LinearState s(env.space);
  Rng rng = substream(3, 0);
  std::size_t i = 0;
  const std::size_t k = env.space->num_actions();
  for (auto _ : state) {
    const ContextId x = env.design[(i / k) % env.design.size()];
    const ActionId a{i % k};
    ++i;
    s.record(x, a, env.mean(x, a) + standard_normal(rng));
    if (s.all_ready()) benchmark::DoNotOptimize(check_stop_p1_linear(s, budget, 0.5).stop);
  }
}
BENCHMARK(BM_LinearRecordAndCheck)->Arg(5)->Arg(10)->Arg(20);

BENCHMARK_MAIN();
