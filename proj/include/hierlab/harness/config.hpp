#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hierlab/agents/common.hpp"
#include "hierlab/envs/point_env.hpp"
#include "hierlab/explore/ou.hpp"

namespace hierlab::harness {

enum class Method { Flat, FlatNStep, GoalHRL, GoalHRLHindsight, Options, Shadow, ExploreExploit, SwitchingEnsemble };

inline constexpr Method kAllMethods[] = {Method::Flat,    Method::FlatNStep, Method::GoalHRL,        Method::GoalHRLHindsight,
                                         Method::Options, Method::Shadow,    Method::ExploreExploit, Method::SwitchingEnsemble};

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::Flat: return "Flat";
    case Method::FlatNStep: return "FlatNStep";
    case Method::GoalHRL: return "GoalHRL";
    case Method::GoalHRLHindsight: return "GoalHRLHindsight";
    case Method::Options: return "Options";
    case Method::Shadow: return "Shadow";
    case Method::ExploreExploit: return "ExploreExploit";
    case Method::SwitchingEnsemble: return "SwitchingEnsemble";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  for (Method m : kAllMethods)
    if (s == method_name(m)) return m;
  throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

/// Any problem with a configuration: unknown key, bad value, inconsistency.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Full declarative description of one experiment.
struct ExperimentConfig {
  std::string name;  // output file stem; empty means "<method>_<task>"
  envs::TaskId task = envs::TaskId::MazeDesk;
  Method method = Method::Flat;
  int c_train = 10;
  int c_expl = 10;
  int c_rew = 3;
  int c_switch = 10;
  bool combined_networks = false;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  long total_env_steps = 300000;
  long eval_every = 10000;
  int eval_episodes = 20;
  int env_steps_per_train_step = 2;
  std::string output_dir = "results";

  // learner settings shared by every method
  std::vector<int> hidden{300, 300};
  int batch_size = 100;
  double actor_lr = 1e-4;
  double actor_preact_penalty = 1e-3;
  double critic_lr = 1e-3;
  double gamma = 0.99;
  double tau = 0.005;
  int policy_delay = 2;
  double smoothing_std = 0.2;
  double smoothing_clip = 0.5;
  double exploration_std = 0.3;
  agents::DiscountExponent discount_exponent = agents::DiscountExponent::horizon;
  long buffer_capacity = 1000000;
  bool sparse_reward = false;

  // method-specific
  double goal_bound = 2.0;
  double high_exploration_std = 1.0;
  double high_reward_scale = 0.1;
  bool offpolicy_relabel = false;
  int option_count = 5;
  double option_epsilon = 0.5;
  int option_nstep = 3;
  double mix_fraction = 0.7;
  double explore_weight = 0.2;
  double ou_sigma = 1.0;
  double ou_damping = 0.8;
  explore::OuForm ou_form = explore::OuForm::reversion;
  int ensemble_members = 5;

  // bookkeeping
  double early_stop_success = 2.0;  // stop a seed once eval success reaches this; > 1 never stops
  bool record_wall_clock = true;
  bool checkpoint = false;

  std::string stem() const {
    return name.empty() ? std::string(method_name(method)) + "_" + std::string(envs::task_name(task)) : name;
  }

  /// Reward horizon of the flat learner(s) in this method.
  int effective_c_rew() const { return method == Method::Flat ? 1 : c_rew; }

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& v) {
  T out{};
  const char* first = v.data();
  const char* last = v.data() + v.size();
  std::from_chars_result r;
  if constexpr (std::is_floating_point_v<T>) {
    // from_chars for double is available in libstdc++ 11
    r = std::from_chars(first, last, out);
  } else {
    r = std::from_chars(first, last, out);
  }
  if (r.ec != std::errc() || r.ptr != last) throw ConfigError("expected a number, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected true or false, got '" + v + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& v) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty list element in '" + v + "'");
    out.push_back(parse_number<T>(item));
  }
  return out;
}

inline std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? ", " : "") << xs[i];
  return os.str();
}

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
  std::vector<Method> only;  // empty: applies to every method
};

inline bool applies(const Field& f, Method m) {
  return f.only.empty() || std::find(f.only.begin(), f.only.end(), m) != f.only.end();
}

#define HIERLAB_INT_FIELD(member, ...)                                                                   \
  Field {                                                                                                \
    #member, [](ExperimentConfig& c, const std::string& v) { c.member = parse_number<decltype(c.member)>(v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.member); }, { __VA_ARGS__ }              \
  }
#define HIERLAB_REAL_FIELD(member, ...)                                                                  \
  Field {                                                                                                \
    #member, [](ExperimentConfig& c, const std::string& v) { c.member = parse_number<double>(v); },     \
        [](const ExperimentConfig& c) { return format_double(c.member); }, { __VA_ARGS__ }               \
  }
#define HIERLAB_BOOL_FIELD(member, ...)                                                                  \
  Field {                                                                                                \
    #member, [](ExperimentConfig& c, const std::string& v) { c.member = parse_bool(v); },               \
        [](const ExperimentConfig& c) { return std::string(c.member ? "true" : "false"); }, { __VA_ARGS__ } \
  }

inline const std::vector<Field>& fields() {
  using M = Method;
  static const std::vector<Field> table = {
      {"name", [](ExperimentConfig& c, const std::string& v) { c.name = v; },
       [](const ExperimentConfig& c) { return c.name; }, {}},
      {"task", [](ExperimentConfig& c, const std::string& v) {
         try {
           c.task = envs::parse_task(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(e.what());
         }
       },
       [](const ExperimentConfig& c) { return std::string(envs::task_name(c.task)); }, {}},
      {"method", [](ExperimentConfig& c, const std::string& v) {
         try {
           c.method = parse_method(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(e.what());
         }
       },
       [](const ExperimentConfig& c) { return std::string(method_name(c.method)); }, {}},
      HIERLAB_INT_FIELD(c_train),
      HIERLAB_INT_FIELD(c_expl),
      HIERLAB_INT_FIELD(c_rew),
      HIERLAB_INT_FIELD(c_switch),
      HIERLAB_BOOL_FIELD(combined_networks),
      {"seeds", [](ExperimentConfig& c, const std::string& v) { c.seeds = parse_list<std::uint64_t>(v); },
       [](const ExperimentConfig& c) { return join(c.seeds); }, {}},
      HIERLAB_INT_FIELD(total_env_steps),
      HIERLAB_INT_FIELD(eval_every),
      HIERLAB_INT_FIELD(eval_episodes),
      HIERLAB_INT_FIELD(env_steps_per_train_step),
      {"output_dir", [](ExperimentConfig& c, const std::string& v) { c.output_dir = v; },
       [](const ExperimentConfig& c) { return c.output_dir; }, {}},
      {"hidden", [](ExperimentConfig& c, const std::string& v) { c.hidden = parse_list<int>(v); },
       [](const ExperimentConfig& c) { return join(c.hidden); }, {}},
      HIERLAB_INT_FIELD(batch_size),
      HIERLAB_REAL_FIELD(actor_lr),
      HIERLAB_REAL_FIELD(actor_preact_penalty),
      HIERLAB_REAL_FIELD(critic_lr),
      HIERLAB_REAL_FIELD(gamma),
      HIERLAB_REAL_FIELD(tau),
      HIERLAB_INT_FIELD(policy_delay),
      HIERLAB_REAL_FIELD(smoothing_std),
      HIERLAB_REAL_FIELD(smoothing_clip),
      HIERLAB_REAL_FIELD(exploration_std),
      {"discount_exponent", [](ExperimentConfig& c, const std::string& v) {
         try {
           c.discount_exponent = agents::parse_discount_exponent(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(e.what());
         }
       },
       [](const ExperimentConfig& c) { return std::string(agents::discount_exponent_name(c.discount_exponent)); }, {}},
      HIERLAB_INT_FIELD(buffer_capacity),
      HIERLAB_BOOL_FIELD(sparse_reward),
      HIERLAB_REAL_FIELD(goal_bound, M::GoalHRL, M::GoalHRLHindsight, M::Shadow, M::ExploreExploit),
      HIERLAB_REAL_FIELD(high_exploration_std, M::GoalHRL, M::GoalHRLHindsight, M::Shadow),
      HIERLAB_REAL_FIELD(high_reward_scale, M::GoalHRL, M::GoalHRLHindsight, M::Shadow, M::Options),
      HIERLAB_BOOL_FIELD(offpolicy_relabel, M::GoalHRL, M::GoalHRLHindsight, M::Shadow),
      HIERLAB_INT_FIELD(option_count, M::Options),
      HIERLAB_REAL_FIELD(option_epsilon, M::Options),
      HIERLAB_INT_FIELD(option_nstep, M::Options),
      HIERLAB_REAL_FIELD(mix_fraction, M::Shadow),
      HIERLAB_REAL_FIELD(explore_weight, M::ExploreExploit),
      HIERLAB_REAL_FIELD(ou_sigma, M::ExploreExploit),
      HIERLAB_REAL_FIELD(ou_damping, M::ExploreExploit),
      {"ou_form", [](ExperimentConfig& c, const std::string& v) {
         try {
           c.ou_form = explore::parse_ou_form(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(e.what());
         }
       },
       [](const ExperimentConfig& c) { return std::string(explore::ou_form_name(c.ou_form)); }, {M::ExploreExploit}},
      HIERLAB_INT_FIELD(ensemble_members, M::SwitchingEnsemble),
      HIERLAB_REAL_FIELD(early_stop_success),
      HIERLAB_BOOL_FIELD(record_wall_clock),
      HIERLAB_BOOL_FIELD(checkpoint),
  };
  return table;
}

#undef HIERLAB_INT_FIELD
#undef HIERLAB_REAL_FIELD
#undef HIERLAB_BOOL_FIELD

inline const Field* find_field(std::string_view key) {
  for (const auto& f : fields())
    if (f.key == key) return &f;
  return nullptr;
}

}  // namespace detail

/// Throws ConfigError naming the offending field.
inline void validate(const ExperimentConfig& c) {
  auto need = [](bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ConfigError("field '" + field + "': " + what);
  };
  need(c.c_train >= 1, "c_train", "must be >= 1");
  need(c.c_expl >= 1, "c_expl", "must be >= 1");
  need(c.c_rew >= 1, "c_rew", "must be >= 1");
  need(c.c_switch >= 1, "c_switch", "must be >= 1");
  need(!c.seeds.empty(), "seeds", "must not be empty");
  need(c.total_env_steps >= 0, "total_env_steps", "must be >= 0");
  need(c.eval_every >= 1, "eval_every", "must be >= 1");
  need(c.eval_episodes >= 1, "eval_episodes", "must be >= 1");
  need(c.env_steps_per_train_step >= 1, "env_steps_per_train_step", "must be >= 1");
  need(!c.hidden.empty(), "hidden", "must list at least one layer");
  for (int h : c.hidden) need(h >= 1, "hidden", "layer sizes must be positive");
  need(c.batch_size >= 1, "batch_size", "must be >= 1");
  need(c.actor_lr > 0, "actor_lr", "must be positive");
  need(c.actor_preact_penalty >= 0, "actor_preact_penalty", "must be non-negative");
  need(c.critic_lr > 0, "critic_lr", "must be positive");
  need(c.gamma > 0 && c.gamma < 1, "gamma", "must lie in (0, 1)");
  need(c.tau >= 0 && c.tau <= 1, "tau", "must lie in [0, 1]");
  need(c.policy_delay >= 1, "policy_delay", "must be >= 1");
  need(c.smoothing_std >= 0, "smoothing_std", "must be >= 0");
  need(c.smoothing_clip >= 0, "smoothing_clip", "must be >= 0");
  need(c.exploration_std >= 0, "exploration_std", "must be >= 0");
  need(c.buffer_capacity >= 1, "buffer_capacity", "must be >= 1");
  need(c.goal_bound > 0, "goal_bound", "must be positive");
  need(c.high_exploration_std >= 0, "high_exploration_std", "must be >= 0");
  need(c.option_count >= 1, "option_count", "must be >= 1");
  need(c.option_epsilon >= 0 && c.option_epsilon <= 1, "option_epsilon", "must lie in [0, 1]");
  need(c.option_nstep >= 1, "option_nstep", "must be >= 1");
  need(c.mix_fraction >= 0 && c.mix_fraction <= 1, "mix_fraction", "must lie in [0, 1]");
  need(c.explore_weight >= 0 && c.explore_weight <= 1, "explore_weight", "must lie in [0, 1]");
  need(c.ou_sigma >= 0, "ou_sigma", "must be >= 0");
  need(c.ou_damping >= 0 && c.ou_damping <= 1, "ou_damping", "must lie in [0, 1]");
  need(c.ensemble_members >= 1, "ensemble_members", "must be >= 1");
  if (c.method == Method::Shadow) {
    const double exact = static_cast<double>(c.batch_size) * c.mix_fraction;
    need(std::abs(exact - std::round(exact)) < 1e-9, "mix_fraction", "batch_size * mix_fraction must be an integer");
  }
}

/// Parses `key = value` lines; `#` starts a comment. Unset keys keep their
/// defaults. Method-specific keys are rejected for other methods. Flat
/// rejects any c_rew other than 1 and always ends up with c_rew = 1.
inline ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  std::set<std::string> seen;
  std::vector<std::pair<const detail::Field*, int>> set_fields;
  int c_rew_line = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(body.substr(0, eq));
    const std::string value = detail::trim(body.substr(eq + 1));
    const auto* f = detail::find_field(key);
    if (!f) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(lineno) + ": key '" + key + "' given twice");
    try {
      f->set(c, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": key '" + key + "': " + e.what());
    }
    set_fields.emplace_back(f, lineno);
    if (key == "c_rew") c_rew_line = lineno;
  }
  for (const auto& [f, ln] : set_fields)
    if (!detail::applies(*f, c.method))
      throw ConfigError("line " + std::to_string(ln) + ": key '" + f->key + "' does not apply to method " +
                        std::string(method_name(c.method)));
  if (c.method == Method::Flat && c_rew_line && c.c_rew != 1)
    throw ConfigError("line " + std::to_string(c_rew_line) + ": key 'c_rew': Flat uses single-step rewards (use FlatNStep)");
  if (c.method == Method::Flat) c.c_rew = 1;
  validate(c);
  return c;
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Every key that applies to the method, one per line, in a fixed order.
inline std::string serialize(const ExperimentConfig& c, bool include_output_dir = true) {
  std::ostringstream os;
  for (const auto& f : detail::fields()) {
    if (!detail::applies(f, c.method)) continue;
    if (f.key == "output_dir" && !include_output_dir) continue;
    if (f.key == "c_rew" && c.method == Method::Flat) continue;
    os << f.key << " = " << f.get(c) << '\n';
  }
  return os.str();
}

/// Sets one sweepable axis from its textual value.
inline void set_axis(ExperimentConfig& c, std::string_view axis, const std::string& value) {
  static const std::set<std::string_view> axes{"c_train", "c_expl", "c_rew", "c_switch", "combined_networks"};
  if (!axes.count(axis)) throw ConfigError("invalid sweep axis '" + std::string(axis) + "'");
  if (axis == "c_rew" && c.method == Method::Flat && value != "1")
    throw ConfigError("key 'c_rew': Flat uses single-step rewards (use FlatNStep)");
  try {
    detail::find_field(axis)->set(c, value);
  } catch (const ConfigError& e) {
    throw ConfigError("axis '" + std::string(axis) + "': " + e.what());
  }
  validate(c);
}

}  // namespace hierlab::harness
