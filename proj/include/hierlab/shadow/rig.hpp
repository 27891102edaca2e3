#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hierlab/agents/td3.hpp"
#include "hierlab/envs/episode.hpp"
#include "hierlab/hrl/goal_agent.hpp"
#include "hierlab/replay/buffer.hpp"
#include "hierlab/replay/transforms.hpp"

namespace hierlab::shadow {

using agents::Td3Agent;
using agents::Transition;

struct ShadowConfig {
  double mix_fraction = 0.7;  // shadow share of every batch
  int c_rew = 3;
  double exploration_std = 0.3;
  agents::Td3Config td3;
  std::size_t batch_size = 100;
  std::size_t buffer_capacity = replay::kDefaultCapacity;
};

struct ShadowLosses {
  hrl::HrlLosses hrl;
  std::optional<agents::Td3Losses> shadow;
};

/// A flat agent trained beside a goal-conditioned hierarchy. Each agent
/// collects its own episodes; the flat agent learns from a fixed mix of
/// both agents' experience, kept as atomic multi-step records.
class ShadowRig {
 public:
  ShadowRig(int obs_dim, hrl::HrlConfig hrl_cfg, ShadowConfig cfg, Rng& rng)
      : cfg_(std::move(cfg)),
        hrl_(obs_dim, std::move(hrl_cfg), rng),
        shadow_(Td3Agent::make(obs_dim, hrl::atomic_box(), cfg_.td3, rng)),
        hrl_buffer_(cfg_.buffer_capacity),
        shadow_buffer_(cfg_.buffer_capacity) {
    if (!(cfg_.mix_fraction >= 0 && cfg_.mix_fraction <= 1)) throw std::invalid_argument("mix_fraction must lie in [0, 1]");
    if (cfg_.c_rew < 1) throw std::invalid_argument("c_rew must be >= 1");
  }

  const ShadowConfig& config() const { return cfg_; }
  const hrl::GoalConditionedAgent& hrl_agent() const { return hrl_; }
  hrl::GoalConditionedAgent& hrl_agent() { return hrl_; }
  const Td3Agent& shadow_agent() const { return shadow_; }
  Td3Agent& shadow_agent() { return shadow_; }
  const replay::ReplayBuffer<Transition>& hrl_buffer() const { return hrl_buffer_; }
  const replay::ReplayBuffer<Transition>& shadow_buffer() const { return shadow_buffer_; }
  bool shadow_turn() const { return shadow_turn_; }

  /// One step in whichever environment's episode is current; episodes
  /// alternate between the hierarchy and the shadow agent.
  envs::EpisodeRunner::Outcome collect_step(envs::EpisodeRunner& hrl_env, envs::EpisodeRunner& shadow_env, Rng& rng) {
    if (!shadow_turn_) {
      if (hrl_env.at_start()) hs_ = {};
      auto [a, next] = hrl_.act_hierarchy(hrl_env.obs(), hs_, true, rng);
      hs_ = std::move(next);
      auto out = hrl_env.step(a, hs_.goal, -1, hs_.anchor);
      if (out.episode_over) {
        const auto traj = hrl_env.finish();
        hrl_.ingest(traj);
        append_atomic(traj, hrl_buffer_);
        shadow_turn_ = true;
      }
      return out;
    }
    auto out = shadow_env.step(shadow_.select_action(shadow_env.obs(), cfg_.exploration_std, rng));
    if (out.episode_over) {
      append_atomic(shadow_env.finish(), shadow_buffer_);
      shadow_turn_ = false;
    }
    return out;
  }

  /// One full round: an HRL episode followed by a shadow episode. Returns the
  /// number of environment steps taken.
  long shadow_collect(envs::EpisodeRunner& hrl_env, envs::EpisodeRunner& shadow_env, Rng& rng) {
    if (shadow_turn_ || !hrl_env.at_start() || !shadow_env.at_start())
      throw std::logic_error("shadow_collect: must start at a round boundary");
    const long done_before = shadow_env.episodes_finished();
    long steps = 0;
    while (shadow_env.episodes_finished() == done_before) {
      collect_step(hrl_env, shadow_env, rng);
      ++steps;
    }
    return steps;
  }

  replay::MixedBatch<Transition> mixed_batch(std::size_t batch_size, Rng& rng) const {
    return replay::sample_mixed(shadow_buffer_, hrl_buffer_, batch_size, cfg_.mix_fraction, rng);
  }

  /// Mixed-batch TD3 step of the shadow agent only.
  agents::Td3Losses shadow_train_step(std::size_t batch_size, Rng& rng) {
    return shadow_.train_step(mixed_batch(batch_size, rng).records, rng);
  }

  bool ready() const {
    const auto n = cfg_.batch_size;
    const bool need_shadow = cfg_.mix_fraction > 0, need_hrl = cfg_.mix_fraction < 1;
    return (!need_shadow || shadow_buffer_.size() >= n) && (!need_hrl || hrl_buffer_.size() >= n);
  }

  ShadowLosses train_step(Rng& rng) {
    ShadowLosses out;
    out.hrl = hrl_.train_step(rng);
    if (ready()) out.shadow = shadow_train_step(cfg_.batch_size, rng);
    return out;
  }

  std::vector<std::shared_ptr<agents::NetGroup>> groups() const {
    auto g = hrl_.groups();
    for (const auto* h : {&shadow_.heads().actor, &shadow_.heads().critic1, &shadow_.heads().critic2}) g.push_back(h->group());
    return g;
  }

 private:
  void append_atomic(const replay::Trajectory& traj, replay::ReplayBuffer<Transition>& buf) const {
    for (std::size_t t = 0; t < traj.size(); ++t) buf.append(replay::nstep_target_inputs(traj, t, cfg_.c_rew));
  }

  ShadowConfig cfg_;
  hrl::GoalConditionedAgent hrl_;
  Td3Agent shadow_;
  replay::ReplayBuffer<Transition> hrl_buffer_;
  replay::ReplayBuffer<Transition> shadow_buffer_;
  hrl::HierarchyState hs_;
  bool shadow_turn_ = false;
};

}  // namespace hierlab::shadow
