#include "glrstop/environments.hpp"

#include "glrstop/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace glrstop {
namespace {

using nlohmann::json;

std::size_t slot(const ContextSpace& space, ContextId x, ActionId a) {
  return x.index * space.num_actions() + a.index;
}

void require_feasible(const ContextSpace& space, ContextId x, ActionId a) {
  if (!space.feasible(x, a)) throw ConfigError("environment: infeasible (context, action) pair");
}

std::vector<ActionId> all_actions(std::size_t k) {
  std::vector<ActionId> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = ActionId{i};
  return out;
}

std::vector<double> normalized(std::vector<double> w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0)) throw ConfigError("environment: weights must have a positive sum");
  for (auto& v : w) v /= total;
  return w;
}

std::string format_value(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::vector<double> uniform_draws(Rng& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> out(n);
  for (auto& v : out) v = dist(rng);
  return out;
}

}  // namespace

double TabularEnvironment::mean(ContextId x, ActionId a) const {
  require_feasible(*space, x, a);
  return truth[slot(*space, x, a)];
}

double TabularEnvironment::sd(ContextId x, ActionId a) const {
  require_feasible(*space, x, a);
  return noise_sd[slot(*space, x, a)];
}

double LinearEnvironment::mean(ContextId x, ActionId a) const {
  require_feasible(*space, x, a);
  return space->context(x).features.dot(betas.at(a.index));
}

void validate(const TabularEnvironment& env) {
  if (!env.space) throw ConfigError("tabular environment: missing context space");
  const auto& space = *env.space;
  const std::size_t size = space.num_contexts() * space.num_actions();
  if (env.truth.size() != size || env.noise_sd.size() != size) {
    throw ConfigError("tabular environment: truth/noise tables must be m x k");
  }
  for (std::size_t i = 0; i < space.num_contexts(); ++i) {
    for (ActionId a : space.contexts()[i].feasible) {
      const std::size_t s = slot(space, ContextId{i}, a);
      if (!std::isfinite(env.truth[s])) throw ConfigError("tabular environment: missing mean for a feasible pair");
      if (!(env.noise_sd[s] > 0.0) || !std::isfinite(env.noise_sd[s])) {
        throw ConfigError("tabular environment: noise sd must be finite and positive");
      }
    }
  }
}

void validate(const LinearEnvironment& env) {
  if (!env.space) throw ConfigError("linear environment: missing context space");
  const auto& space = *env.space;
  if (env.betas.size() != space.num_actions() || env.noise_sd.size() != space.num_actions()) {
    throw ConfigError("linear environment: need one beta and one noise sd per action");
  }
  for (const auto& b : env.betas) {
    if (static_cast<std::size_t>(b.size()) != space.dimension()) {
      throw ConfigError("linear environment: beta length must equal the dimension");
    }
  }
  for (double s : env.noise_sd) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("linear environment: noise sd must be finite and positive");
  }
  for (ContextId x : env.design) {
    if (x.index >= space.num_contexts()) throw ConfigError("linear environment: unknown design context");
  }
}

const ContextSpace& space_of(const Environment& env) { return *shared_space_of(env); }

std::shared_ptr<const ContextSpace> shared_space_of(const Environment& env) {
  return std::visit([](const auto& e) { return e.space; }, env);
}

double true_mean(const Environment& env, ContextId x, ActionId a) {
  return std::visit([&](const auto& e) { return e.mean(x, a); }, env);
}

double noise_sd(const Environment& env, ContextId x, ActionId a) {
  return std::visit([&](const auto& e) { return e.sd(x, a); }, env);
}

double sample(const Environment& env, ContextId x, ActionId a, Rng& rng) {
  const double mu = true_mean(env, x, a);
  return mu + noise_sd(env, x, a) * standard_normal(rng);
}

std::vector<ActionId> optimal_policy(const Environment& env) {
  const auto& space = space_of(env);
  std::vector<ActionId> policy;
  policy.reserve(space.num_contexts());
  for (std::size_t i = 0; i < space.num_contexts(); ++i) {
    const ContextId x{i};
    const auto& feasible = space.context(x).feasible;
    ActionId best = feasible.front();
    double best_value = true_mean(env, x, best);
    for (ActionId a : feasible) {
      const double v = true_mean(env, x, a);
      if (v > best_value) {
        best = a;
        best_value = v;
      }
    }
    policy.push_back(best);
  }
  return policy;
}

TabularEnvironment toy_env() {
  constexpr std::size_t k = 10;
  constexpr std::size_t m = 10;
  std::vector<std::string> actions;
  for (std::size_t i = 1; i <= k; ++i) actions.push_back("a" + std::to_string(i));
  std::vector<Context> contexts;
  for (std::size_t j = 1; j <= m; ++j) {
    contexts.push_back({"x" + std::to_string(j), Eigen::VectorXd::Constant(1, static_cast<double>(j)),
                        1.0 / static_cast<double>(m), all_actions(k)});
  }
  TabularEnvironment env;
  env.name = "toy";
  env.space = std::make_shared<const ContextSpace>(std::move(actions), std::move(contexts), 1);
  env.truth.resize(m * k);
  env.noise_sd.resize(m * k);
  for (std::size_t j = 1; j <= m; ++j) {
    for (std::size_t i = 1; i <= k; ++i) {
      const double gap = std::abs(static_cast<double>(i) - static_cast<double>(j));
      const std::size_t s = (j - 1) * k + (i - 1);
      env.truth[s] = gap * (0.1 + 0.1 * static_cast<double>(j - 1));
      env.noise_sd[s] = 0.1 + 0.1 * static_cast<double>(i - 1) + 0.1 * static_cast<double>(j - 1);
    }
  }
  validate(env);
  return env;
}

TabularEnvironment matyas_env(std::uint64_t weights_seed) {
  const std::vector<double> action_values{-10.0, -5.0, 0.0, 5.0, 10.0};
  const std::vector<double> context_values{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  Rng rng = substream(weights_seed, 0);
  const auto weights = normalized(uniform_draws(rng, context_values.size(), 0.0, 1.0));

  std::vector<std::string> actions;
  for (double a : action_values) actions.push_back("a" + format_value(a));
  std::vector<Context> contexts;
  for (std::size_t j = 0; j < context_values.size(); ++j) {
    contexts.push_back({"x" + format_value(context_values[j]), Eigen::VectorXd::Constant(1, context_values[j]),
                        weights[j], all_actions(action_values.size())});
  }
  TabularEnvironment env;
  env.name = "matyas";
  env.space = std::make_shared<const ContextSpace>(std::move(actions), std::move(contexts), 1);
  for (double x : context_values) {
    for (double a : action_values) {
      env.truth.push_back(0.26 * (x * x + a * a) - 0.48 * x * a);
      env.noise_sd.push_back(1.0);
    }
  }
  validate(env);
  return env;
}

TabularEnvironment dixon_price_env(std::uint64_t seed) {
  const std::vector<double> action_levels{0.0, 0.8, 1.6};
  const std::vector<double> context_levels{-0.2, -0.1, 0.0, 0.1, 0.2};
  const std::size_t k = action_levels.size() * action_levels.size();
  const std::size_t m = context_levels.size() * context_levels.size();
  Rng rng = substream(seed, 0);
  const auto sds = uniform_draws(rng, m * k, 0.5, 2.0);
  const auto weights = normalized(uniform_draws(rng, m, 0.0, 1.0));

  std::vector<std::string> actions;
  std::vector<Eigen::Vector2d> action_points;
  for (double a1 : action_levels) {
    for (double a2 : action_levels) {
      actions.push_back("a(" + format_value(a1) + "," + format_value(a2) + ")");
      action_points.emplace_back(a1, a2);
    }
  }
  std::vector<Context> contexts;
  for (double x1 : context_levels) {
    for (double x2 : context_levels) {
      contexts.push_back({"x(" + format_value(x1) + "," + format_value(x2) + ")", Eigen::Vector2d(x1, x2),
                          weights[contexts.size()], all_actions(k)});
    }
  }
  TabularEnvironment env;
  env.name = "dixon_price";
  for (const auto& c : contexts) {
    for (const auto& a : action_points) {
      const double g1 = a[0] - c.features[0];
      const double g2 = a[1] - c.features[1];
      const double inner = 2.0 * g2 * g2 - g1;
      env.truth.push_back(g1 * g1 + 2.0 * inner * inner);
    }
  }
  env.noise_sd = sds;
  env.space = std::make_shared<const ContextSpace>(std::move(actions), std::move(contexts), 2);
  validate(env);
  return env;
}

std::shared_ptr<const ContextSpace> linear_grid_space(std::size_t k, std::size_t d, std::size_t levels,
                                                      const std::vector<double>& level_weights) {
  if (d == 0 || k == 0 || levels < 2) throw ConfigError("linear grid: need k >= 1, d >= 1, levels >= 2");
  if (!level_weights.empty() && level_weights.size() != levels) {
    throw ConfigError("linear grid: one weight per level expected");
  }
  const std::size_t free_dims = d - 1;
  std::size_t m = 1;
  for (std::size_t i = 0; i < free_dims; ++i) m *= levels;

  std::vector<std::string> actions;
  for (std::size_t i = 1; i <= k; ++i) actions.push_back("a" + std::to_string(i));
  std::vector<Context> contexts;
  std::vector<double> weights;
  std::vector<std::size_t> digits(free_dims, 0);
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t rest = c;
    for (std::size_t i = free_dims; i-- > 0;) {
      digits[i] = rest % levels;
      rest /= levels;
    }
    Eigen::VectorXd f(static_cast<Eigen::Index>(d));
    f[0] = 1.0;
    std::string name = "x";
    double w = 1.0;
    for (std::size_t i = 0; i < free_dims; ++i) {
      f[static_cast<Eigen::Index>(i + 1)] = static_cast<double>(digits[i]) / static_cast<double>(levels - 1);
      name += (i == 0 ? "" : "_") + std::to_string(digits[i]);
      if (!level_weights.empty()) w *= level_weights[digits[i]];
    }
    if (free_dims == 0) name = "x0";
    contexts.push_back({name, f, 0.0, all_actions(k)});
    weights.push_back(w);
  }
  weights = normalized(weights);
  for (std::size_t i = 0; i < m; ++i) contexts[i].probability = weights[i];
  return std::make_shared<const ContextSpace>(std::move(actions), std::move(contexts), d);
}

std::vector<ContextId> grid_corners(const ContextSpace& space) {
  std::vector<ContextId> out;
  for (std::size_t i = 0; i < space.num_contexts(); ++i) {
    const auto& f = space.contexts()[i].features;
    bool corner = true;
    for (Eigen::Index j = 1; j < f.size(); ++j) corner = corner && (f[j] == 0.0 || f[j] == 1.0);
    if (corner) out.push_back(ContextId{i});
  }
  return out;
}

LinearEnvironment standard_linear_env(std::size_t k) {
  LinearEnvironment env;
  env.name = "standard_linear_k" + std::to_string(k);
  env.space = linear_grid_space(k, 3, 6);
  for (std::size_t i = 0; i < k; ++i) {
    const double shift = 0.5 * static_cast<double>(i);
    env.betas.emplace_back(Eigen::Vector3d(shift, 1.0 + shift, 1.0 + shift));
    env.noise_sd.push_back(1.0);
  }
  env.design = grid_corners(*env.space);
  validate(env);
  return env;
}

LinearEnvironment random_linear_env(const RandomLinearSpec& spec) {
  Rng rng = substream(spec.seed, 0);
  std::vector<double> level_weights;
  if (spec.random_weights) level_weights = uniform_draws(rng, spec.levels, 0.0, 1.0);
  LinearEnvironment env;
  env.name = "random_linear";
  env.space = linear_grid_space(spec.k, spec.d, spec.levels, level_weights);
  for (std::size_t i = 0; i < spec.k; ++i) {
    const auto b = uniform_draws(rng, spec.d, 0.0, 5.0);
    env.betas.emplace_back(Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())));
  }
  env.noise_sd = uniform_draws(rng, spec.k, 0.5, 2.0);
  env.design = grid_corners(*env.space);
  validate(env);
  return env;
}

// JSON format:
//   {"schema": 1, "type": "tabular" | "linear", "name": ..., "actions": [...],
//    "contexts": [{"id": ..., "features": [...], "feasible": [...]?}],
//    "weights": [...]?                      (renormalized; uniform if absent)
//    tabular: "truth": [[...]], "noise": [[...]] | number  (rows per context, null = infeasible)
//    linear:  "betas": {action: [...]}, "noise": {action: sd} | number, "design": [...]?}
Environment environment_from_json(const json& doc) {
  try {
    const std::string type = doc.at("type").get<std::string>();
    if (doc.contains("schema") && doc.at("schema").get<int>() != 1) {
      throw ConfigError("environment: unsupported schema version");
    }
    const auto actions = doc.at("actions").get<std::vector<std::string>>();
    const auto& ctx_doc = doc.at("contexts");
    if (!ctx_doc.is_array() || ctx_doc.empty()) throw ConfigError("environment: contexts must be a nonempty array");

    std::map<std::string, std::size_t> action_index;
    for (std::size_t i = 0; i < actions.size(); ++i) action_index[actions[i]] = i;
    auto lookup_action = [&](const std::string& name) {
      auto it = action_index.find(name);
      if (it == action_index.end()) throw ConfigError("environment: unknown action '" + name + "'");
      return ActionId{it->second};
    };

    std::vector<double> weights(ctx_doc.size(), 1.0);
    if (doc.contains("weights")) {
      weights = doc.at("weights").get<std::vector<double>>();
      if (weights.size() != ctx_doc.size()) throw ConfigError("environment: one weight per context expected");
    }
    weights = normalized(weights);

    std::vector<Context> contexts;
    std::size_t dimension = 0;
    for (std::size_t i = 0; i < ctx_doc.size(); ++i) {
      const auto& c = ctx_doc[i];
      const auto features = c.at("features").get<std::vector<double>>();
      if (i == 0) dimension = features.size();
      Context ctx;
      ctx.name = c.at("id").get<std::string>();
      ctx.features = Eigen::Map<const Eigen::VectorXd>(features.data(), static_cast<Eigen::Index>(features.size()));
      ctx.probability = weights[i];
      if (c.contains("feasible")) {
        for (const auto& name : c.at("feasible").get<std::vector<std::string>>()) ctx.feasible.push_back(lookup_action(name));
      } else {
        ctx.feasible = all_actions(actions.size());
      }
      contexts.push_back(std::move(ctx));
    }
    auto space = std::make_shared<const ContextSpace>(actions, std::move(contexts), dimension);
    const std::size_t k = actions.size();
    const std::size_t m = space->num_contexts();
    const std::string name = doc.value("name", std::string(type));

    if (type == "tabular") {
      TabularEnvironment env;
      env.name = name;
      env.space = space;
      env.truth.assign(m * k, std::numeric_limits<double>::quiet_NaN());
      env.noise_sd.assign(m * k, std::numeric_limits<double>::quiet_NaN());
      const auto& truth = doc.at("truth");
      const auto& noise = doc.at("noise");
      if (truth.size() != m) throw ConfigError("environment: truth needs one row per context");
      for (std::size_t i = 0; i < m; ++i) {
        if (truth[i].size() != k) throw ConfigError("environment: truth rows need one entry per action");
        for (std::size_t a = 0; a < k; ++a) {
          if (!truth[i][a].is_null()) env.truth[i * k + a] = truth[i][a].get<double>();
          const auto& s = noise.is_number() ? noise : noise.at(i).at(a);
          if (!s.is_null()) env.noise_sd[i * k + a] = s.get<double>();
        }
      }
      validate(env);
      return env;
    }
    if (type == "linear") {
      LinearEnvironment env;
      env.name = name;
      env.space = space;
      env.betas.resize(k);
      env.noise_sd.resize(k);
      const auto& betas = doc.at("betas");
      const auto& noise = doc.at("noise");
      for (std::size_t a = 0; a < k; ++a) {
        const auto b = betas.at(actions[a]).get<std::vector<double>>();
        env.betas[a] = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
        env.noise_sd[a] = noise.is_number() ? noise.get<double>() : noise.at(actions[a]).get<double>();
      }
      if (doc.contains("design")) {
        for (const auto& id : doc.at("design").get<std::vector<std::string>>()) {
          auto x = space->find_context(id);
          if (!x) throw ConfigError("environment: unknown design context '" + id + "'");
          env.design.push_back(*x);
        }
      }
      validate(env);
      return env;
    }
    throw ConfigError("environment: unknown type '" + type + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("environment: malformed document: ") + e.what());
  }
}

json environment_to_json(const Environment& env) {
  const auto& space = space_of(env);
  json doc;
  doc["schema"] = 1;
  doc["actions"] = std::vector<std::string>(space.action_names().begin(), space.action_names().end());
  json contexts = json::array();
  json weights = json::array();
  for (const auto& c : space.contexts()) {
    json feasible = json::array();
    for (ActionId a : c.feasible) feasible.push_back(space.action_name(a));
    contexts.push_back({{"id", c.name},
                        {"features", std::vector<double>(c.features.data(), c.features.data() + c.features.size())},
                        {"feasible", feasible}});
    weights.push_back(c.probability);
  }
  doc["contexts"] = contexts;
  doc["weights"] = weights;
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        doc["name"] = e.name;
        if constexpr (std::is_same_v<T, TabularEnvironment>) {
          doc["type"] = "tabular";
          json truth = json::array();
          json noise = json::array();
          for (std::size_t i = 0; i < space.num_contexts(); ++i) {
            json tr = json::array();
            json nr = json::array();
            for (std::size_t a = 0; a < space.num_actions(); ++a) {
              if (space.feasible(ContextId{i}, ActionId{a})) {
                tr.push_back(e.truth[i * space.num_actions() + a]);
                nr.push_back(e.noise_sd[i * space.num_actions() + a]);
              } else {
                tr.push_back(nullptr);
                nr.push_back(nullptr);
              }
            }
            truth.push_back(tr);
            noise.push_back(nr);
          }
          doc["truth"] = truth;
          doc["noise"] = noise;
        } else {
          doc["type"] = "linear";
          json betas = json::object();
          json noise = json::object();
          for (std::size_t a = 0; a < space.num_actions(); ++a) {
            const auto& b = e.betas[a];
            betas[space.action_name(ActionId{a})] = std::vector<double>(b.data(), b.data() + b.size());
            noise[space.action_name(ActionId{a})] = e.noise_sd[a];
          }
          doc["betas"] = betas;
          doc["noise"] = noise;
          json design = json::array();
          for (ContextId x : e.design) design.push_back(space.context(x).name);
          doc["design"] = design;
        }
      },
      env);
  return doc;
}

Environment load_environment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("environment: cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("environment: " + path.string() + ": " + e.what());
  }
  return environment_from_json(doc);
}

DataSourceMode DataSourceMode::simulation() { return DataSourceMode{}; }

DataSourceMode DataSourceMode::online() {
  DataSourceMode m;
  m.schedule = {SourceSegment{SourceKind::Online, 0}};
  return m;
}

DataSourceMode DataSourceMode::offline(std::vector<std::pair<ContextId, ActionId>> log) {
  DataSourceMode m;
  m.schedule = {SourceSegment{SourceKind::OfflineLog, 0}};
  m.log = std::move(log);
  return m;
}

void validate(const DataSourceMode& source, const ContextSpace& space) {
  if (source.schedule.empty()) throw ConfigError("data source: empty schedule");
  for (std::size_t i = 0; i + 1 < source.schedule.size(); ++i) {
    if (source.schedule[i].length == 0) throw ConfigError("data source: only the last segment may be unbounded");
  }
  for (const auto& [x, a] : source.log) {
    if (!space.feasible(x, a)) throw ConfigError("data source: offline log references an infeasible pair");
  }
}

ContextId draw_context(const ContextSpace& space, Rng& rng) {
  std::vector<double> p;
  p.reserve(space.num_contexts());
  for (const auto& c : space.contexts()) p.push_back(c.probability);
  std::discrete_distribution<std::size_t> dist(p.begin(), p.end());
  return ContextId{dist(rng)};
}

SourceDraw next_context(const DataSourceMode& source, const ContextSpace& space, Rng& rng, std::uint64_t stage) {
  if (stage == 0) throw ConfigError("data source: stages are 1-based");
  std::uint64_t start = 1;
  std::uint64_t offline_before = 0;
  for (const auto& seg : source.schedule) {
    const bool unbounded = seg.length == 0;
    if (unbounded || stage < start + seg.length) {
      SourceDraw draw;
      draw.kind = seg.kind;
      if (seg.kind == SourceKind::OfflineLog) {
        const std::uint64_t cursor = offline_before + (stage - start);
        if (cursor >= source.log.size()) throw SourceExhausted("data source: offline log exhausted");
        draw.context = source.log[cursor].first;
        draw.action = source.log[cursor].second;
      } else if (seg.kind == SourceKind::Online) {
        draw.context = draw_context(space, rng);
      }
      return draw;
    }
    if (seg.kind == SourceKind::OfflineLog) offline_before += seg.length;
    start += seg.length;
  }
  throw SourceExhausted("data source: schedule exhausted");
}

}  // namespace glrstop
