#include "glrstop/harness.hpp"

#include "glrstop/errors.hpp"
#include "glrstop/glr_linear.hpp"
#include "glrstop/glr_unstructured.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <thread>

#ifndef GLRSTOP_DATA_DIR
#define GLRSTOP_DATA_DIR ""
#endif
#ifndef GLRSTOP_SOURCE_DATA_DIR
#define GLRSTOP_SOURCE_DATA_DIR ""
#endif

namespace glrstop {
namespace {

using nlohmann::json;

constexpr double kTruthTolerance = 1e-9;

std::filesystem::path resolve(const std::string& name, const std::filesystem::path& base_dir) {
  namespace fs = std::filesystem;
  const fs::path p(name);
  if (p.is_absolute()) return p;
  for (const fs::path& dir : {base_dir, default_data_dir(), default_data_dir() / "environments"}) {
    if (dir.empty()) continue;
    if (fs::exists(dir / p)) return dir / p;
  }
  throw ConfigError("config: cannot find environment file '" + name + "'");
}

Environment builtin_environment(const json& spec) {
  const std::string name = spec.at("builtin").get<std::string>();
  if (name == "toy") return toy_env();
  if (name == "matyas") return matyas_env(spec.value("seed", std::uint64_t{1}));
  if (name == "dixon_price") return dixon_price_env(spec.value("seed", std::uint64_t{1}));
  if (name == "standard_linear") return standard_linear_env(spec.value("k", std::size_t{10}));
  if (name == "random_linear") {
    RandomLinearSpec r;
    r.k = spec.value("k", r.k);
    r.d = spec.value("d", r.d);
    r.levels = spec.value("levels", r.levels);
    r.seed = spec.value("seed", r.seed);
    r.random_weights = spec.value("random_weights", r.random_weights);
    return random_linear_env(r);
  }
  throw ConfigError("config: unknown builtin environment '" + name + "'");
}

Environment parse_environment(const json& spec, const std::filesystem::path& base_dir) {
  if (spec.is_string()) return load_environment(resolve(spec.get<std::string>(), base_dir));
  if (!spec.is_object()) throw ConfigError("config: environment must be a file name or an object");
  if (spec.contains("builtin")) return builtin_environment(spec);
  if (spec.contains("file")) return load_environment(resolve(spec.at("file").get<std::string>(), base_dir));
  return environment_from_json(spec);
}

SourceKind parse_kind(const std::string& mode) {
  if (mode == "simulation") return SourceKind::Simulation;
  if (mode == "online") return SourceKind::Online;
  if (mode == "offline") return SourceKind::OfflineLog;
  throw ConfigError("config: unknown source mode '" + mode + "'");
}

std::string kind_name(SourceKind kind) {
  switch (kind) {
    case SourceKind::Simulation: return "simulation";
    case SourceKind::Online: return "online";
    case SourceKind::OfflineLog: return "offline";
  }
  return "simulation";
}

DataSourceMode parse_source(const json& spec, const ContextSpace& space) {
  DataSourceMode source;
  const std::string mode = spec.value("mode", std::string("simulation"));
  if (spec.contains("log")) {
    for (const auto& entry : spec.at("log")) {
      const auto x = space.find_context(entry.at(0).get<std::string>());
      const auto a = space.find_action(entry.at(1).get<std::string>());
      if (!x || !a) throw ConfigError("config: offline log references an unknown context or action");
      source.log.emplace_back(*x, *a);
    }
  }
  if (mode == "hybrid") {
    source.schedule.clear();
    for (const auto& seg : spec.at("schedule")) {
      source.schedule.push_back({parse_kind(seg.at("mode").get<std::string>()), seg.value("length", std::uint64_t{0})});
    }
  } else {
    source.schedule = {SourceSegment{parse_kind(mode), 0}};
  }
  validate(source, space);
  return source;
}

json source_to_json(const DataSourceMode& source, const ContextSpace& space) {
  json out;
  if (source.schedule.size() == 1 && source.schedule[0].length == 0) {
    out["mode"] = kind_name(source.schedule[0].kind);
  } else {
    out["mode"] = "hybrid";
    json schedule = json::array();
    for (const auto& seg : source.schedule) schedule.push_back({{"mode", kind_name(seg.kind)}, {"length", seg.length}});
    out["schedule"] = schedule;
  }
  if (!source.log.empty()) {
    json log = json::array();
    for (const auto& [x, a] : source.log) log.push_back({space.context(x).name, space.action_name(a)});
    out["log"] = log;
  }
  return out;
}

std::uint64_t parse_count(const json& doc, const char* key, std::uint64_t fallback) {
  if (!doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  // accepts 1e6-style numbers
  const double d = v.get<double>();
  if (!(d >= 0.0) || d != std::floor(d) || d > 9.2e18) throw ConfigError(std::string("config: ") + key + " must be a count");
  return static_cast<std::uint64_t>(d);
}

std::vector<ActionId> fallback_policy(const ContextSpace& space, const std::vector<std::optional<ActionId>>& best) {
  std::vector<ActionId> out;
  for (std::size_t i = 0; i < space.num_contexts(); ++i) {
    out.push_back(best[i] ? *best[i] : space.contexts()[i].feasible.front());
  }
  return out;
}

std::vector<ActionId> current_policy(const UnstructuredState& state) {
  const auto& space = state.space();
  std::vector<std::optional<ActionId>> best(space.num_contexts());
  for (std::size_t i = 0; i < space.num_contexts(); ++i) {
    try {
      best[i] = empirical_best(state, ContextId{i});
    } catch (const NotReady&) {
    }
  }
  return fallback_policy(space, best);
}

std::vector<ActionId> current_policy(const LinearState& state) {
  const auto& space = state.space();
  std::vector<std::optional<ActionId>> best(space.num_contexts());
  for (std::size_t i = 0; i < space.num_contexts(); ++i) {
    try {
      best[i] = empirical_best_linear(state, ContextId{i});
    } catch (const NotReady&) {
    }
  }
  return fallback_policy(space, best);
}

template <class State, class OnRecord, class Check>
ReplicationResult drive(const ExperimentConfig& config, std::uint64_t rep_index, State& state, OnRecord&& on_record,
                        Check&& should_stop, SamplingStrategy& strategy, Rng& rng) {
  const auto& env = *config.environment;
  const auto& space = state.space();
  bool uses_strategy = false;
  for (const auto& seg : config.source.schedule) uses_strategy = uses_strategy || seg.kind != SourceKind::OfflineLog;

  ReplicationResult result;
  result.replication = rep_index;
  result.censored = true;
  result.stop_time = config.t_max;
  for (std::uint64_t t = 1; t <= config.t_max; ++t) {
    SourceDraw draw;
    try {
      draw = next_context(config.source, space, rng, t);
    } catch (const SourceExhausted&) {
      result.stop_time = t - 1;
      break;
    }
    ContextId x;
    ActionId a;
    if (draw.kind == SourceKind::OfflineLog) {
      x = *draw.context;
      a = *draw.action;
    } else if (draw.kind == SourceKind::Online) {
      x = *draw.context;
      a = strategy.next_action(state, x, rng);
    } else {
      const auto d = strategy.next_pair(state, rng);
      x = d.context;
      a = d.action;
    }
    state.record(x, a, sample(env, x, a, rng));
    on_record(x);
    if (uses_strategy && !strategy.warmed_up()) continue;
    if (t % config.check_interval != 0) continue;
    if (should_stop()) {
      result.censored = false;
      result.stop_time = t;
      break;
    }
  }
  result.policy = current_policy(state);
  const auto [p1, p2] = precision_indicators(env, result.policy, config.delta);
  result.p1_indicator = p1;
  result.p2_indicator = p2;
  return result;
}

}  // namespace

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("GLRSTOP_DATA_DIR"); env && *env) return env;
  // a build tree prefers the checked-out data over an install that may not exist yet
  const std::filesystem::path source(GLRSTOP_SOURCE_DATA_DIR);
  if (!source.empty() && std::filesystem::exists(source)) return source;
  return GLRSTOP_DATA_DIR;
}

void ExperimentConfig::validate() const {
  if (!environment) throw ConfigError("config: no environment");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("config: alpha must lie in (0, 1)");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("config: delta must be finite and >= 0");
  if (t_max < 1) throw ConfigError("config: t_max must be >= 1");
  if (replications < 1) throw ConfigError("config: replications must be >= 1");
  if (check_interval < 1) throw ConfigError("config: check_interval must be >= 1");
  if (setting == Setting::Linear && !std::holds_alternative<LinearEnvironment>(*environment)) {
    throw ConfigError("config: the linear setting needs a linear environment");
  }
  if (strategy.name != "equal_allocation" && strategy.name != "uniform_random" &&
      strategy.name != "greedy_challenger") {
    throw ConfigError("config: unknown strategy '" + strategy.name + "'");
  }
  glrstop::validate(source, space_of(*environment));
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  try {
    ExperimentConfig c;
    const auto& env_spec = doc.at("environment");
    c.environment = std::make_shared<const Environment>(parse_environment(env_spec, base_dir));
    c.environment_ref = env_spec.is_object() && !env_spec.contains("builtin") && !env_spec.contains("file")
                            ? environment_to_json(*c.environment).value("name", std::string("inline"))
                            : env_spec.dump();
    const bool linear_env = std::holds_alternative<LinearEnvironment>(*c.environment);
    const std::string setting = doc.value("setting", std::string(linear_env ? "linear" : "unstructured"));
    if (setting == "linear") {
      c.setting = Setting::Linear;
    } else if (setting == "unstructured") {
      c.setting = Setting::Unstructured;
    } else {
      throw ConfigError("config: unknown setting '" + setting + "'");
    }
    const std::string criterion = doc.value("criterion", std::string("P1"));
    if (criterion == "P1") {
      c.criterion = Criterion::P1;
    } else if (criterion == "P2") {
      c.criterion = Criterion::P2;
    } else {
      throw ConfigError("config: criterion must be P1 or P2");
    }
    c.alpha = doc.value("alpha", c.alpha);
    c.delta = doc.value("delta", c.delta);
    if (doc.contains("strategy")) {
      const auto& s = doc.at("strategy");
      if (s.is_string()) {
        c.strategy.name = s.get<std::string>();
      } else {
        c.strategy.name = s.value("name", c.strategy.name);
        c.strategy.n0 = parse_count(s, "n0", c.strategy.n0);
        c.strategy.use_design = s.value("design", c.strategy.use_design);
      }
    }
    c.check_interval = parse_count(doc, "check_interval", c.check_interval);
    const std::string divisor = doc.value("variance_divisor", std::string("unbiased"));
    if (divisor == "unbiased") {
      c.divisor = VarianceDivisor::Unbiased;
    } else if (divisor == "ml") {
      c.divisor = VarianceDivisor::MaximumLikelihood;
    } else {
      throw ConfigError("config: variance_divisor must be 'unbiased' or 'ml'");
    }
    if (doc.contains("source")) c.source = parse_source(doc.at("source"), space_of(*c.environment));
    c.replications = parse_count(doc, "replications", c.replications);
    c.seed = parse_count(doc, "seed", c.seed);
    c.t_max = parse_count(doc, "t_max", c.t_max);
    c.output = doc.value("output", std::string());
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

json config_to_json(const ExperimentConfig& c) {
  json out;
  out["environment"] = json::parse(c.environment_ref.empty() ? "null" : c.environment_ref, nullptr, false);
  if (out["environment"].is_discarded()) out["environment"] = c.environment_ref;
  out["setting"] = c.setting == Setting::Linear ? "linear" : "unstructured";
  out["criterion"] = c.criterion == Criterion::P1 ? "P1" : "P2";
  out["alpha"] = c.alpha;
  out["delta"] = c.delta;
  out["strategy"] = {{"name", c.strategy.name}, {"n0", c.strategy.n0}, {"design", c.strategy.use_design}};
  out["check_interval"] = c.check_interval;
  out["variance_divisor"] = c.divisor == VarianceDivisor::Unbiased ? "unbiased" : "ml";
  out["source"] = source_to_json(c.source, space_of(*c.environment));
  out["replications"] = c.replications;
  out["seed"] = c.seed;
  out["t_max"] = c.t_max;
  if (!c.output.empty()) out["output"] = c.output;
  return out;
}

std::pair<double, int> precision_indicators(const Environment& env, const std::vector<ActionId>& policy,
                                            double delta) {
  const auto& space = space_of(env);
  if (policy.size() != space.num_contexts()) throw ConfigError("indicators: policy must cover every context");
  const auto optimal = optimal_policy(env);
  double p1 = 0.0;
  double value = 0.0;
  double best_value = 0.0;
  for (std::size_t i = 0; i < space.num_contexts(); ++i) {
    const ContextId x{i};
    const double p = space.context(x).probability;
    const double chosen = true_mean(env, x, policy[i]);
    const double best = true_mean(env, x, optimal[i]);
    if (chosen >= best - delta - kTruthTolerance) p1 += p;
    value += p * chosen;
    best_value += p * best;
  }
  return {std::min(p1, 1.0), value >= best_value - delta - kTruthTolerance ? 1 : 0};
}

std::unique_ptr<SamplingStrategy> make_strategy(const ExperimentConfig& config, const ErrorBudget& budget) {
  const auto& space = space_of(*config.environment);
  EqualAllocationOptions ea{config.strategy.n0, {}};
  if (config.strategy.use_design) {
    const auto* linear = std::get_if<LinearEnvironment>(config.environment.get());
    if (!linear || linear->design.empty()) throw ConfigError("config: design allocation needs design points");
    ea.design = linear->design;
  }
  if (config.strategy.name == "equal_allocation") return std::make_unique<EqualAllocation>(space, ea);
  if (config.strategy.name == "uniform_random") return std::make_unique<UniformRandom>(space);
  if (config.strategy.name == "greedy_challenger") {
    return std::make_unique<GreedyChallenger>(space, budget, config.delta, config.divisor, ea);
  }
  throw ConfigError("config: unknown strategy '" + config.strategy.name + "'");
}

ReplicationResult run_replication(const ExperimentConfig& config, std::uint64_t rep_index) {
  config.validate();
  auto space = shared_space_of(*config.environment);
  Rng rng = substream(config.seed, rep_index);
  const ErrorBudget budget = make_budget(*space, config.criterion, config.alpha);
  auto strategy = make_strategy(config, budget);
  const RuleOptions options{config.divisor, false};

  if (config.setting == Setting::Linear) {
    LinearState state(space);
    auto check = [&] {
      return config.criterion == Criterion::P1 ? check_stop_p1_linear(state, budget, config.delta, options).stop
                                               : check_stop_p2_linear(state, budget, config.delta, options).stop;
    };
    return drive(config, rep_index, state, [](ContextId) {}, check, *strategy, rng);
  }
  UnstructuredState state(space);
  UnstructuredMonitor monitor(*space, budget, config.delta, options);
  return drive(
      config, rep_index, state, [&](ContextId x) { monitor.touch(x); }, [&] { return monitor.should_stop(state); },
      *strategy, rng);
}

AggregateReport aggregate(std::vector<ReplicationResult> results) {
  AggregateReport report;
  report.replications = results.size();
  if (results.empty()) return report;
  const double n = static_cast<double>(results.size());
  double sum = 0.0;
  for (const auto& r : results) {
    sum += static_cast<double>(r.stop_time);
    report.empirical_p1 += r.p1_indicator;
    report.empirical_p2 += r.p2_indicator;
    if (r.censored) ++report.censor_count;
  }
  report.avg_ssize = sum / n;
  report.empirical_p1 /= n;
  report.empirical_p2 /= n;
  if (results.size() > 1) {
    double ss = 0.0;
    for (const auto& r : results) {
      const double dev = static_cast<double>(r.stop_time) - report.avg_ssize;
      ss += dev * dev;
    }
    report.std_ssize = std::sqrt(ss / (n - 1.0));
  }
  report.results = std::move(results);
  return report;
}

AggregateReport run_experiment(const ExperimentConfig& config, unsigned workers) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, config.replications));

  std::vector<ReplicationResult> results(config.replications);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::uint64_t i = next++; i < config.replications; i = next++) {
      try {
        results[i] = run_replication(config, i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = config.replications;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  AggregateReport report = aggregate(std::move(results));
  report.config_echo = config_to_json(config).dump();
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void write_results_csv(std::ostream& out, const ExperimentConfig& config, const AggregateReport& report) {
  const auto& space = space_of(*config.environment);
  out << "# schema=1\n";
  out << "# config=" << (report.config_echo.empty() ? config_to_json(config).dump() : report.config_echo) << "\n";
  out << "kind,replication,stop_time,stop_time_std,censored,p1,p2,policy\n";
  out << std::setprecision(10);
  for (const auto& r : report.results) {
    out << "rep," << r.replication << ',' << r.stop_time << ",," << (r.censored ? 1 : 0) << ',' << r.p1_indicator
        << ',' << r.p2_indicator << ',';
    for (std::size_t i = 0; i < r.policy.size(); ++i) out << (i ? ";" : "") << space.action_name(r.policy[i]);
    out << '\n';
  }
  out << "summary," << report.replications << ',' << report.avg_ssize << ',' << report.std_ssize << ','
      << report.censor_count << ',' << report.empirical_p1 << ',' << report.empirical_p2 << ",\n";
}

std::vector<std::uint64_t> log_grid(std::uint64_t t_max, std::size_t points) {
  if (t_max < 1 || points < 2) throw ConfigError("grid: need t_max >= 1 and at least 2 points");
  std::vector<std::uint64_t> grid;
  const double top = std::log(static_cast<double>(t_max));
  for (std::size_t i = 0; i < points; ++i) {
    const double t = std::exp(top * static_cast<double>(i) / static_cast<double>(points - 1));
    grid.push_back(std::clamp<std::uint64_t>(static_cast<std::uint64_t>(std::llround(t)), 1, t_max));
  }
  grid.back() = t_max;
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

void emit_boundary_csv(std::ostream& out, const std::vector<double>& alphas, const std::vector<std::uint64_t>& grid) {
  out << "# schema=1\n";
  out << "t,alpha,gamma,asymptotic_reference\n";
  out << std::setprecision(12);
  for (double alpha : alphas) {
    for (std::uint64_t t : grid) {
      const double g = boundary::gamma(t, alpha);
      out << t << ',' << alpha << ',';
      if (std::isinf(g)) {
        out << "inf";
      } else {
        out << g;
      }
      out << ',' << boundary::asymptotic_reference(static_cast<double>(t), alpha) << '\n';
    }
  }
}

}  // namespace glrstop
