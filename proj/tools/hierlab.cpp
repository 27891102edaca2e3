#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hierlab/harness/config.hpp"
#include "hierlab/harness/plot.hpp"
#include "hierlab/harness/run.hpp"

namespace {

using namespace hierlab;
using namespace hierlab::harness;

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

ExperimentConfig load(const std::string& path) {
  ExperimentConfig c = load_config_file(path);
  if (const char* out = std::getenv("HIERLAB_OUT"); out && *out) c.output_dir = out;
  return c;
}

void print_summary(const RunResult& r) {
  for (const auto& s : r.summaries)
    std::cout << "seed " << s.seed << ": best success " << s.best_success_rate << " at step " << s.best_env_step
              << (s.stopped_early ? " (stopped early)" : "") << '\n';
  std::cout << "mean best success " << r.mean_best_success() << '\n' << "wrote " << r.csv_path << '\n';
}

void progress(const EvalRecord& r) {
  std::cerr << "seed " << r.seed << " step " << r.env_step << " success " << r.success_rate << " return " << r.mean_return
            << '\n';
}

std::vector<std::string> split_values(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b == std::string::npos) throw ConfigError("empty value in --values");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierlab: hierarchical RL ablation experiments"};
  app.require_subcommand(1);

  std::string run_config;
  auto* run = app.add_subcommand("run", "run every seed of one experiment");
  run->add_option("config", run_config, "experiment config file")->required();

  std::string sweep_config, axis, values;
  auto* sw = app.add_subcommand("sweep", "run one experiment per value of an axis");
  sw->add_option("config", sweep_config, "base experiment config file")->required();
  sw->add_option("--axis", axis, "c_train, c_expl, c_rew, c_switch or combined_networks")->required();
  sw->add_option("--values", values, "comma-separated values")->required();

  std::string checkpoint, task;
  int episodes = 0;
  auto* ev = app.add_subcommand("eval", "evaluate a saved checkpoint greedily");
  ev->add_option("checkpoint", checkpoint, "checkpoint directory")->required();
  ev->add_option("task", task, "task name, e.g. PointMazeDesk")->required();
  ev->add_option("--episodes", episodes, "episodes (default: the config's eval_episodes)");

  std::vector<std::string> csvs;
  std::string plot_out;
  auto* pl = app.add_subcommand("plot", "render success curves to SVG");
  pl->add_option("csv", csvs, "run CSV files")->required();
  pl->add_option("-o,--output", plot_out, "output SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*run) {
      print_summary(run_experiment(load(run_config), {}, progress));
    } else if (*sw) {
      const auto res = sweep(load(sweep_config), axis, split_values(values), progress);
      for (std::size_t i = 0; i < res.values.size(); ++i) {
        std::cout << axis << " = " << res.values[i] << '\n';
        print_summary(res.runs[i]);
      }
      std::cout << "index " << res.index_path << '\n';
    } else if (*ev) {
      envs::TaskId id;
      try {
        id = envs::parse_task(task);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      const envs::EnvSpec spec = envs::make_spec(id);
      auto ck = load_checkpoint(checkpoint, spec);
      Rng rng(ck.seed, "eval");
      auto policy = ck.method->eval_policy();
      const auto r = evaluate(*policy, spec, episodes > 0 ? episodes : ck.config.eval_episodes, rng);
      std::cout << "success_rate " << r.success_rate << '\n' << "mean_return " << r.mean_return << '\n';
    } else if (*pl) {
      emit_curves(csvs, plot_out);
      std::cout << "wrote " << plot_out << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
