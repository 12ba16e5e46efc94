// Acceptance runner: one PASS/FAIL line per criterion.
//
//   glrstop_acceptance            run every criterion
//   glrstop_acceptance 4 7        run criteria 4 and 7
//
// Exit status is 0 only when every selected criterion passes.

#include "glrstop/boundary.hpp"
#include "glrstop/environments.hpp"
#include "glrstop/glr_linear.hpp"
#include "glrstop/glr_unstructured.hpp"
#include "glrstop/harness.hpp"
#include "glrstop/rng.hpp"
#include "glrstop/validation_suites.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace glrstop;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Entry {
  const char* name;
  std::function<Outcome()> run;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// 0.95 - 3 sqrt(0.05 * 0.95 / 200), rounded
constexpr double kGuaranteeFloor = 0.904;

Outcome suite_outcome(const SuiteResult& suite) {
  std::ostringstream detail;
  bool first = true;
  for (const auto& c : suite.checks) {
    if (!first) detail << "; ";
    first = false;
    detail << c.label << " = " << c.value;
    if (c.informational) detail << " (info)";
  }
  return {suite.passed(), detail.str()};
}

Outcome boundary_activation() {
  bool ok = true;
  for (std::uint64_t t = 1; t <= 4; ++t) ok = ok && boundary::rho(t, 0.05) <= 0.0;
  const double rho5 = boundary::rho(5, 0.05);
  ok = ok && rho5 > 0.0;
  return {ok, fmt("rho(1..4) <= 0, rho(5) = %.10f", rho5)};
}

template <class Gamma>
Outcome asymptote(Gamma&& gamma, const char* label) {
  bool ok = true;
  double worst = 0.0;
  for (double alpha : {0.5, 0.05, 0.005}) {
    const double at = std::abs(gamma(1'000'000, alpha) - boundary::asymptotic_reference(1e6, alpha));
    worst = std::max(worst, at);
    ok = ok && at <= 0.05;
    double previous = HUGE_VAL;
    for (double t = 1e2; t <= 1e8; t *= 10.0) {
      const double gap = std::abs(gamma(static_cast<std::uint64_t>(t), alpha) - boundary::asymptotic_reference(t, alpha));
      ok = ok && gap < previous;
      previous = gap;
    }
  }
  return {ok, fmt("%s: max gap at t = 1e6 is %.5f (<= 0.05), monotone on 1e2..1e8", label, worst)};
}

Outcome unstructured_asymptote() {
  return asymptote([](std::uint64_t t, double a) { return boundary::gamma(t, a); }, "gamma");
}

Outcome linear_asymptote() {
  Outcome d1 = asymptote(
      [](std::uint64_t t, double a) { return boundary::gamma_l(t, static_cast<double>(t), a, 1); }, "gamma_l d=1");
  Outcome d3 = asymptote(
      [](std::uint64_t t, double a) { return boundary::gamma_l(t, static_cast<double>(t), a, 3); }, "gamma_l d=3");
  return {d1.passed && d3.passed, d1.detail + "; " + d3.detail};
}

ExperimentConfig shipped(const char* file) { return load_config(default_data_dir() / "configs" / file); }

Outcome toy_guarantee(const char* file, bool p2) {
  const auto config = shipped(file);
  const auto report = run_experiment(config);
  const double floor = kGuaranteeFloor;
  const double precision = p2 ? report.empirical_p2 : report.empirical_p1;
  const bool ok = precision >= floor && report.censor_count == 0;
  return {ok, fmt("%s = %.4f (>= %.3f), censored %llu/%llu, avg stop %.1f +- %.1f", p2 ? "P_II" : "P_I", precision,
                  floor, static_cast<unsigned long long>(report.censor_count),
                  static_cast<unsigned long long>(config.replications), report.avg_ssize, report.std_ssize)};
}

Outcome standard_case() {
  const auto p1 = shipped("standard_linear_p1.json");
  const auto p2 = shipped("standard_linear_p2.json");
  const auto r1 = run_experiment(p1);
  const auto r2 = run_experiment(p2);
  const double floor = kGuaranteeFloor;
  const bool ok = r1.avg_ssize >= 900.0 && r1.avg_ssize <= 1500.0 && r2.avg_ssize >= 413.0 && r2.avg_ssize <= 690.0 &&
                  r1.empirical_p1 >= floor && r2.empirical_p2 >= floor && r1.censor_count == 0 &&
                  r2.censor_count == 0;
  return {ok, fmt("tau_I avg %.2f +- %.2f in [900, 1500], tau_II avg %.2f +- %.2f in [413, 690], "
                  "P_I %.3f, P_II %.3f (>= %.3f)",
                  r1.avg_ssize, r1.std_ssize, r2.avg_ssize, r2.std_ssize, r1.empirical_p1, r2.empirical_p2, floor)};
}

// One context, features = 1, k actions sampled round robin. With equal counts
// the linear rule (n - 1 divisor) and the unstructured rule (n divisor) take
// the same decision; compare them after every full round.
Outcome scalar_reduction() {
  constexpr std::size_t k = 3;
  constexpr std::uint64_t rounds = 1500;
  const std::vector<double> means{0.0, 0.25, 0.4};
  const std::vector<double> sds{1.0, 0.7, 1.5};
  std::vector<std::string> actions{"a1", "a2", "a3"};
  std::vector<ActionId> all{ActionId{0}, ActionId{1}, ActionId{2}};
  auto space = std::make_shared<const ContextSpace>(
      actions, std::vector<Context>{{"x", Eigen::VectorXd::Ones(1), 1.0, all}}, 1);
  const double delta = 0.1;
  const RuleOptions unbiased{VarianceDivisor::Unbiased, false};
  const RuleOptions ml{VarianceDivisor::MaximumLikelihood, false};

  std::uint64_t compared = 0;
  std::uint64_t mismatches = 0;
  std::uint64_t stops = 0;
  for (auto criterion : {Criterion::P1, Criterion::P2}) {
    const auto budget = make_budget(*space, criterion, 0.05);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng = substream(seed, 0);
      LinearState lin(space);
      UnstructuredState un(space);
      for (std::uint64_t r = 0; r < rounds; ++r) {
        for (std::size_t a = 0; a < k; ++a) {
          const double y = means[a] + sds[a] * standard_normal(rng);
          lin.record(ContextId{0}, ActionId{a}, y);
          un.record(ContextId{0}, ActionId{a}, y);
        }
        if (!lin.all_ready()) continue;
        const bool l = criterion == Criterion::P1 ? check_stop_p1_linear(lin, budget, delta, unbiased).stop
                                                  : check_stop_p2_linear(lin, budget, delta, unbiased).stop;
        const bool u = criterion == Criterion::P1 ? check_stop_p1(un, budget, delta, ml).stop
                                                  : check_stop_p2(un, budget, delta, ml).stop;
        ++compared;
        if (l != u) ++mismatches;
        if (l) ++stops;
      }
    }
  }
  // the comparison must cover both outcomes to mean anything
  const bool ok = mismatches == 0 && stops > 0 && stops < compared;
  return {ok, fmt("%llu stage comparisons over 20 seeds x {P1, P2}, %llu mismatches, %llu stop decisions",
                  static_cast<unsigned long long>(compared), static_cast<unsigned long long>(mismatches),
                  static_cast<unsigned long long>(stops))};
}

Outcome growth_in_k() {
  std::vector<double> avg;
  std::string detail;
  for (std::size_t k : {5u, 10u, 20u}) {
    ExperimentConfig c;
    c.environment = std::make_shared<const Environment>(standard_linear_env(k));
    c.environment_ref = R"({"builtin":"standard_linear","k":)" + std::to_string(k) + "}";
    c.setting = Setting::Linear;
    c.criterion = Criterion::P1;
    c.alpha = 0.05;
    c.delta = 0.5;
    c.strategy.n0 = 10;
    c.strategy.use_design = true;
    c.replications = 50;
    c.seed = 12;
    c.t_max = 10'000'000;
    const auto report = run_experiment(c);
    avg.push_back(report.avg_ssize);
    detail += fmt("T(%zu) = %.1f, ", k, report.avg_ssize);
  }
  const double ratio = avg[2] / avg[0];
  const bool ok = avg[0] < avg[1] && avg[1] < avg[2] && ratio < 16.0;
  return {ok, detail + fmt("T(20)/T(5) = %.2f (< 16)", ratio)};
}

const std::vector<Entry>& criteria() {
  static const std::vector<Entry> list{
      {"boundary_activation", boundary_activation},
      {"unstructured_asymptote", unstructured_asymptote},
      {"linear_asymptote", linear_asymptote},
      {"unstructured_ville_coverage", [] { return suite_outcome(lemma1_suite()); }},
      {"linear_ville_coverage", [] { return suite_outcome(lemma3_suite()); }},
      {"constrained_fit_oracle", [] { return suite_outcome(lemma2_suite()); }},
      {"martingale_mean_one", [] { return suite_outcome(martingale_suite()); }},
      {"toy_p1_guarantee", [] { return toy_guarantee("toy_p1.json", false); }},
      {"toy_p2_guarantee", [] { return toy_guarantee("toy_p2.json", true); }},
      {"standard_case_equal_allocation", standard_case},
      {"scalar_reduction", scalar_reduction},
      {"growth_in_k", growth_in_k},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  const auto& list = criteria();
  std::vector<std::size_t> selected;
  for (int i = 1; i < argc; ++i) {
    char* end = nullptr;
    const long idx = std::strtol(argv[i], &end, 10);
    if (*end != '\0' || idx < 1 || idx > static_cast<long>(list.size())) {
      std::fprintf(stderr, "usage: %s [criterion 1..%zu ...]\n", argv[0], list.size());
      return 2;
    }
    selected.push_back(static_cast<std::size_t>(idx));
  }
  if (selected.empty()) {
    for (std::size_t i = 1; i <= list.size(); ++i) selected.push_back(i);
  }

  int failures = 0;
  for (std::size_t idx : selected) {
    const auto& c = list[idx - 1];
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  [%2zu] %-30s %s  (%.1fs)\n", outcome.passed ? "PASS" : "FAIL", idx, c.name,
                outcome.detail.c_str(), secs);
    std::fflush(stdout);
    if (!outcome.passed) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
