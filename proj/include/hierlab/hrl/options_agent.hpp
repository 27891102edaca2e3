#pragma once

#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hierlab/agents/dqn.hpp"
#include "hierlab/agents/td3.hpp"
#include "hierlab/hrl/config.hpp"
#include "hierlab/hrl/goal_agent.hpp"
#include "hierlab/replay/buffer.hpp"
#include "hierlab/replay/transforms.hpp"

namespace hierlab::hrl {

struct OptionsLosses {
  std::optional<double> high;
  std::vector<std::optional<agents::Td3Losses>> options;
};

/// m reward-maximising TD3 policies under a double-DQN selector that picks
/// one of them every c_expl steps. Each option owns a buffer holding only
/// the steps at which it was active.
class OptionsAgent {
 public:
  OptionsAgent(int obs_dim, HrlConfig cfg, Rng& rng) : cfg_(std::move(cfg)), high_buffer_(cfg_.buffer_capacity) {
    cfg_.validate();
    if (cfg_.paradigm != Paradigm::Options) throw std::invalid_argument("OptionsAgent: goal-conditioned paradigm");
    const auto m = static_cast<std::size_t>(cfg_.m);
    auto heads = agents::build_td3_family(std::vector<int>(m, obs_dim), std::vector<agents::ActionBox>(m, atomic_box()),
                                          cfg_.low, cfg_.combined_networks, rng);
    for (auto& h : heads) {
      options_.emplace_back(std::move(h), atomic_box(), cfg_.low, obs_dim);
      buffers_.emplace_back(cfg_.buffer_capacity);
    }
    high_ = agents::DqnAgent::make(obs_dim, cfg_.m, cfg_.option_selector, rng);
  }

  const HrlConfig& config() const { return cfg_; }
  int option_count() const { return cfg_.m; }
  const agents::Td3Agent& option(int i) const { return options_.at(static_cast<std::size_t>(i)); }
  agents::Td3Agent& option(int i) { return options_.at(static_cast<std::size_t>(i)); }
  const agents::DqnAgent& high() const { return high_; }
  agents::DqnAgent& high() { return high_; }
  const replay::ReplayBuffer<agents::Transition>& option_buffer(int i) const { return buffers_.at(static_cast<std::size_t>(i)); }
  const replay::ReplayBuffer<CStepTransition>& high_buffer() const { return high_buffer_; }

  /// Exploration uses epsilon-greedy selection and Gaussian action noise;
  /// otherwise both levels act greedily.
  std::pair<Vector, HierarchyState> act_hierarchy(const Vector& obs, HierarchyState hs, bool explore, Rng& rng) const {
    if (hs.steps_since_goal == 0) {
      hs.option = explore ? high_.select_action(obs, rng) : high_.greedy(obs);
      hs.anchor = obs.head<2>();
    }
    const auto& pi = options_[static_cast<std::size_t>(hs.option)];
    Vector a = explore ? pi.select_action(obs, cfg_.low_exploration_std, rng) : pi.act(obs);
    hs.steps_since_goal = (hs.steps_since_goal + 1) % cfg_.c_expl;
    return {std::move(a), std::move(hs)};
  }

  void ingest(const Trajectory& traj) {
    for (std::size_t t = 0; t < traj.size(); ++t) {
      const int o = traj[t].option;
      if (o < 0 || o >= cfg_.m) throw std::out_of_range("options ingest: step without a valid option");
      buffers_[static_cast<std::size_t>(o)].append(replay::nstep_target_inputs(traj, t, cfg_.low_level_nstep));
    }
    for (std::size_t t = 0; t < traj.size(); t += static_cast<std::size_t>(cfg_.c_expl))
      high_buffer_.append(replay::aggregate_cstep(traj, t, cfg_.c_train));
  }

  agents::Td3Losses low_level_train_step_options(int option_index, const std::vector<agents::Transition>& batch, Rng& rng) {
    if (option_index < 0 || option_index >= cfg_.m) throw std::out_of_range("option index out of range");
    return options_[static_cast<std::size_t>(option_index)].train_step(batch, rng);
  }

  double high_level_train_step(const std::vector<CStepTransition>& batch) {
    std::vector<CStepTransition> scaled;
    scaled.reserve(batch.size());
    for (const auto& c : batch) {
      if (c.nominal_horizon != cfg_.c_train) throw std::invalid_argument("high-level record horizon differs from c_train");
      scaled.push_back(c);
      scaled.back().r_sum *= cfg_.high_reward_scale;
    }
    return high_.train_step(scaled);
  }

  OptionsLosses train_step(Rng& rng) {
    OptionsLosses out;
    if (high_buffer_.size() >= cfg_.batch_size) out.high = high_level_train_step(high_buffer_.sample(cfg_.batch_size, rng));
    for (int i = 0; i < cfg_.m; ++i) {
      const auto& buf = buffers_[static_cast<std::size_t>(i)];
      out.options.emplace_back();
      if (buf.size() >= cfg_.batch_size)
        out.options.back() = low_level_train_step_options(i, buf.sample(cfg_.batch_size, rng), rng);
    }
    return out;
  }

  std::vector<std::shared_ptr<agents::NetGroup>> groups() const {
    std::vector<std::shared_ptr<agents::NetGroup>> g;
    for (const auto& a : options_)
      for (const auto* h : {&a.heads().actor, &a.heads().critic1, &a.heads().critic2})
        if (std::find(g.begin(), g.end(), h->group()) == g.end()) g.push_back(h->group());
    g.push_back(high_.q().group());
    return g;
  }

 private:
  HrlConfig cfg_;
  std::vector<agents::Td3Agent> options_;
  std::vector<replay::ReplayBuffer<agents::Transition>> buffers_;
  agents::DqnAgent high_;
  replay::ReplayBuffer<CStepTransition> high_buffer_;
};

}  // namespace hierlab::hrl
