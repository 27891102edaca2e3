#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hierlab/approx/snapshot.hpp"
#include "hierlab/harness/config.hpp"
#include "hierlab/harness/methods.hpp"

namespace hierlab::harness {

inline constexpr const char* kCsvHeader = "seed,env_step,success_rate,mean_return,wall_clock_seconds";

struct EvalRecord {
  std::uint64_t seed = 0;
  long env_step = 0;
  double success_rate = 0.0;
  double mean_return = 0.0;
  double wall_clock_seconds = 0.0;

  bool operator==(const EvalRecord&) const = default;
};

using EvalObserver = std::function<void(const EvalRecord&)>;

struct EvalResult {
  int successes = 0;
  int episodes = 0;
  double success_rate = 0.0;
  double mean_return = 0.0;
};

/// Greedy rollouts on fresh episodes. An episode counts as a success if the
/// success condition holds at any of its steps.
inline EvalResult evaluate(EvalPolicy& policy, const envs::EnvSpec& spec, int n_episodes, Rng& rng) {
  if (n_episodes < 1) throw std::invalid_argument("evaluate: n_episodes must be >= 1");
  EvalResult out;
  out.episodes = n_episodes;
  double total_return = 0.0;
  for (int e = 0; e < n_episodes; ++e) {
    policy.reset();
    envs::EnvState s = envs::reset(spec, rng);
    Vector obs = envs::observe(spec, s);
    bool hit = false;
    for (;;) {
      auto [next, res] = envs::step(spec, s, policy.act(obs, s.t, rng));
      total_return += res.reward;
      hit = hit || res.success;
      s = next;
      obs = res.observation;
      if (res.done) break;
    }
    out.successes += hit ? 1 : 0;
  }
  out.success_rate = static_cast<double>(out.successes) / n_episodes;
  out.mean_return = total_return / n_episodes;
  return out;
}

struct SeedSummary {
  std::uint64_t seed = 0;
  double best_success_rate = 0.0;
  long best_env_step = 0;
  bool stopped_early = false;
  long train_steps = 0;
};

struct RunResult {
  std::vector<EvalRecord> records;
  std::vector<SeedSummary> summaries;
  std::string csv_path;

  double mean_best_success() const {
    if (summaries.empty()) return 0.0;
    double s = 0;
    for (const auto& x : summaries) s += x.best_success_rate;
    return s / static_cast<double>(summaries.size());
  }
};

/// Any failure inside a run, tagged with the seed and step it happened at.
class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string format_csv_number(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

/// The comment line carries every config key except output_dir, so that the
/// same experiment written to two places yields identical files.
inline std::string csv_text(const ExperimentConfig& c, const std::vector<EvalRecord>& rows) {
  std::string cfg = serialize(c, false);
  std::replace(cfg.begin(), cfg.end(), '\n', ';');
  std::ostringstream os;
  os << "# config: " << cfg << '\n' << kCsvHeader << '\n';
  for (const auto& r : rows)
    os << r.seed << ',' << r.env_step << ',' << format_csv_number(r.success_rate) << ',' << format_csv_number(r.mean_return)
       << ',' << format_csv_number(r.wall_clock_seconds) << '\n';
  return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

inline std::filesystem::path checkpoint_dir(const ExperimentConfig& c, std::uint64_t seed) {
  return std::filesystem::path(c.output_dir) / (c.stem() + "_seed" + std::to_string(seed) + ".ckpt");
}

/// A checkpoint directory holds manifest.txt (seed plus config) and one
/// online and one target snapshot per network group.
inline void save_checkpoint(const std::filesystem::path& dir, const ExperimentConfig& c, std::uint64_t seed,
                            const MethodRunner& method) {
  std::filesystem::create_directories(dir);
  const auto groups = method.groups();
  std::ostringstream manifest;
  manifest << "# seed " << seed << '\n' << "# groups " << groups.size() << '\n' << serialize(c);
  write_text(dir / "manifest.txt", manifest.str());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    approx::write_snapshot((dir / ("group" + std::to_string(i) + "_online.bin")).string(), groups[i]->online.params());
    approx::write_snapshot((dir / ("group" + std::to_string(i) + "_target.bin")).string(), groups[i]->target.params());
  }
}

struct LoadedCheckpoint {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  std::unique_ptr<MethodRunner> method;
};

/// Rebuilds the method for the stored config and seed on `spec`, then
/// overwrites every network with its stored parameters.
inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir, const std::optional<envs::EnvSpec>& spec = {}) {
  std::ifstream in(dir / "manifest.txt");
  if (!in) throw std::runtime_error("checkpoint: cannot read " + (dir / "manifest.txt").string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  LoadedCheckpoint out;
  std::size_t group_count = 0;
  {
    std::istringstream lines(text);
    std::string tag, word;
    lines >> tag >> word >> out.seed >> tag >> word >> group_count;
    if (!lines || word != "groups") throw std::runtime_error("checkpoint: malformed manifest");
  }
  out.config = parse_config(text);
  const envs::EnvSpec env = spec ? *spec : envs::make_spec(out.config.task);
  out.method = build_method(out.config, env, out.seed);
  const auto groups = out.method->groups();
  if (groups.size() != group_count) throw std::runtime_error("checkpoint: network layout differs from manifest");
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (auto [which, net] : {std::pair{"_online.bin", &groups[i]->online}, std::pair{"_target.bin", &groups[i]->target}}) {
      const Vector p = approx::read_snapshot((dir / ("group" + std::to_string(i) + which)).string());
      if (p.size() != net->params().size()) throw std::runtime_error("checkpoint: parameter count mismatch in group " + std::to_string(i));
      net->params() = p;
    }
  }
  return out;
}

/// Train and evaluate one seed. Evaluations happen at step 0, every
/// eval_every steps and after the final step. Training runs once every
/// env_steps_per_train_step collected steps. `keep`, when given, receives
/// the trained method.
inline std::vector<EvalRecord> run_seed(const ExperimentConfig& c, const envs::EnvSpec& spec, std::uint64_t seed,
                                        SeedSummary& summary, std::unique_ptr<MethodRunner>* keep = nullptr,
                                        const EvalObserver& observe = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  auto method = build_method(c, spec, seed);
  Rng collect(seed, "collect"), train(seed, "train"), eval_rng(seed, "eval");
  std::vector<EvalRecord> rows;
  summary = {seed, -1.0, 0, false, 0};

  auto eval_at = [&](long step) {
    auto policy = method->eval_policy();
    const auto r = evaluate(*policy, spec, c.eval_episodes, eval_rng);
    const double wall =
        c.record_wall_clock ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() : 0.0;
    rows.push_back({seed, step, r.success_rate, r.mean_return, wall});
    if (observe) observe(rows.back());
    if (r.success_rate > summary.best_success_rate) {
      summary.best_success_rate = r.success_rate;
      summary.best_env_step = step;
    }
    return r.success_rate >= c.early_stop_success;
  };

  long step = 0;
  try {
    bool stop = eval_at(0);
    while (!stop && step < c.total_env_steps) {
      method->collect_step(collect);
      ++step;
      if (step % c.env_steps_per_train_step == 0) {
        method->train_step(train);
        ++summary.train_steps;
      }
      if (step % c.eval_every == 0 || step == c.total_env_steps) stop = eval_at(step);
    }
    summary.stopped_early = step < c.total_env_steps;
    if (c.checkpoint) save_checkpoint(checkpoint_dir(c, seed), c, seed, *method);
  } catch (const std::exception& e) {
    throw RunError(std::string(method_name(c.method)) + " seed " + std::to_string(seed) + " at env step " +
                   std::to_string(step) + ": " + e.what());
  }
  if (keep) *keep = std::move(method);
  return rows;
}

inline std::string summary_text(const std::vector<SeedSummary>& s) {
  std::ostringstream os;
  os << "seed,best_success_rate,best_env_step,stopped_early\n";
  for (const auto& x : s)
    os << x.seed << ',' << format_csv_number(x.best_success_rate) << ',' << x.best_env_step << ','
       << (x.stopped_early ? 1 : 0) << '\n';
  return os.str();
}

/// Runs every seed in order, then writes <output_dir>/<stem>.csv with the
/// full curves and <stem>_best.csv with the best-so-far success per seed.
inline RunResult run_experiment(const ExperimentConfig& c, const std::optional<envs::EnvSpec>& spec_override = {},
                                const EvalObserver& observe = {}) {
  validate(c);
  const envs::EnvSpec spec = spec_override ? *spec_override : envs::make_spec(c.task);
  envs::validate(spec);
  RunResult out;
  for (auto seed : c.seeds) {
    SeedSummary s;
    auto rows = run_seed(c, spec, seed, s, nullptr, observe);
    out.records.insert(out.records.end(), rows.begin(), rows.end());
    out.summaries.push_back(s);
  }
  const auto base = std::filesystem::path(c.output_dir) / c.stem();
  out.csv_path = base.string() + ".csv";
  write_text(out.csv_path, csv_text(c, out.records));
  write_text(base.string() + "_best.csv", summary_text(out.summaries));
  return out;
}

struct SweepResult {
  std::vector<std::string> values;
  std::vector<RunResult> runs;
  std::string index_path;
};

/// The config used for one sweep value: the axis set and the stem suffixed
/// with "_<axis><value>".
inline ExperimentConfig sweep_member(const ExperimentConfig& base, const std::string& axis, const std::string& value) {
  ExperimentConfig c = base;
  set_axis(c, axis, value);
  c.name = base.stem() + "_" + axis + value;
  return c;
}

/// One run per value plus a tab-separated index (value, csv path).
inline SweepResult sweep(const ExperimentConfig& base, const std::string& axis, const std::vector<std::string>& values,
                         const EvalObserver& observe = {}) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<ExperimentConfig> members;
  for (const auto& v : values) members.push_back(sweep_member(base, axis, v));
  SweepResult out;
  out.values = values;
  std::ostringstream index;
  index << "value\tcsv\n";
  for (std::size_t i = 0; i < members.size(); ++i) {
    out.runs.push_back(run_experiment(members[i], {}, observe));
    index << values[i] << '\t' << std::filesystem::path(out.runs.back().csv_path).filename().string() << '\n';
  }
  out.index_path = (std::filesystem::path(base.output_dir) / (base.stem() + "_" + axis + "_index.tsv")).string();
  write_text(out.index_path, index.str());
  return out;
}

}  // namespace hierlab::harness
