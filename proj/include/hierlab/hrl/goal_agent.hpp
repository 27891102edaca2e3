#pragma once

#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hierlab/agents/td3.hpp"
#include "hierlab/hrl/config.hpp"
#include "hierlab/hrl/intrinsic.hpp"
#include "hierlab/hrl/relabel.hpp"
#include "hierlab/replay/buffer.hpp"
#include "hierlab/replay/transforms.hpp"

namespace hierlab::hrl {

using replay::GoalTransition;
using replay::Trajectory;
using Vec2 = Eigen::Vector2d;

/// Per-episode bookkeeping of the high-level action in force.
struct HierarchyState {
  Vector goal;      // goal-conditioned paradigms
  int option = -1;  // options paradigm
  Vec2 anchor{0, 0};
  int steps_since_goal = 0;
};

struct HrlLosses {
  std::optional<agents::Td3Losses> low;
  std::optional<agents::Td3Losses> high;
};

/// Two-level agent: a TD3 high level proposing displacement goals every
/// c_expl steps and a goal-conditioned TD3 low level acting in the
/// environment.
class GoalConditionedAgent {
 public:
  GoalConditionedAgent(int obs_dim, HrlConfig cfg, Rng& rng)
      : cfg_(std::move(cfg)),
        obs_dim_(obs_dim),
        low_buffer_(cfg_.buffer_capacity),
        high_buffer_(cfg_.buffer_capacity) {
    cfg_.validate();
    if (cfg_.paradigm == Paradigm::Options) throw std::invalid_argument("GoalConditionedAgent: options paradigm");
    auto heads = agents::build_td3_family({obs_dim, obs_dim + 2}, {cfg_.goal_box(), atomic_box()}, cfg_.low,
                                          cfg_.combined_networks, rng);
    high_ = agents::Td3Agent(heads[0], cfg_.goal_box(), cfg_.high, obs_dim);
    low_ = agents::Td3Agent(heads[1], atomic_box(), cfg_.low, obs_dim + 2);
  }

  const HrlConfig& config() const { return cfg_; }
  const agents::Td3Agent& high() const { return high_; }
  const agents::Td3Agent& low() const { return low_; }
  agents::Td3Agent& high() { return high_; }
  agents::Td3Agent& low() { return low_; }
  const replay::ReplayBuffer<GoalTransition>& low_buffer() const { return low_buffer_; }
  const replay::ReplayBuffer<CStepTransition>& high_buffer() const { return high_buffer_; }

  /// Picks a new goal when the counter is at 0, then the low-level action.
  std::pair<Vector, HierarchyState> act_hierarchy(const Vector& obs, HierarchyState hs, bool explore, Rng& rng) const {
    if (hs.steps_since_goal == 0) {
      hs.goal = explore ? high_.select_action(obs, cfg_.high_exploration_std, rng) : high_.act(obs);
      hs.anchor = obs.head<2>();
    }
    const Vector f = low_features(obs, hs.anchor, hs.goal);
    Vector a = explore ? low_.select_action(f, cfg_.low_exploration_std, rng) : low_.act(f);
    hs.steps_since_goal = (hs.steps_since_goal + 1) % cfg_.c_expl;
    return {std::move(a), std::move(hs)};
  }

  /// Low-level records of one episode, next goals expressed in each record's
  /// own anchor frame (not yet frozen).
  std::vector<GoalTransition> low_records(const Trajectory& traj) const {
    std::vector<GoalTransition> out;
    for (std::size_t i = 0; i < traj.size(); ++i) {
      const auto& st = traj[i];
      GoalTransition g;
      g.s = st.obs;
      g.g = st.goal;
      g.anchor = st.anchor;
      g.a = st.action;
      g.s_next = st.next_obs;
      g.g_next = i + 1 < traj.size() ? Vector(traj[i + 1].goal + traj[i + 1].anchor - st.anchor) : st.goal;
      g.r_int = intrinsic_reward(st.anchor, st.goal, replay::xy_of(st.next_obs));
      g.done = st.terminal;
      out.push_back(std::move(g));
    }
    return out;
  }

  /// High-level records: one per goal-selection step, aggregated over c_train.
  std::vector<CStepTransition> high_records(const Trajectory& traj) const {
    std::vector<CStepTransition> out;
    for (std::size_t t = 0; t < traj.size(); t += static_cast<std::size_t>(cfg_.c_expl))
      out.push_back(replay::aggregate_cstep(traj, t, cfg_.c_train));
    return out;
  }

  void ingest(const Trajectory& traj) {
    const auto lows = low_records(traj);
    for (const auto& r : lows) low_buffer_.append(r);
    if (cfg_.paradigm == Paradigm::GoalConditionedHindsight) {
      // final-achieved-state relabelling within each goal window
      const auto c = static_cast<std::size_t>(cfg_.c_expl);
      for (std::size_t start = 0; start < lows.size(); start += c) {
        const std::size_t end = std::min(start + c, lows.size());
        const Vec2 achieved = replay::xy_of(lows[end - 1].s_next) - lows[start].anchor;
        for (std::size_t i = start; i < end; ++i) low_buffer_.append(replay::hindsight_relabel(lows[i], achieved));
      }
    }
    for (auto& r : high_records(traj)) high_buffer_.append(std::move(r));
  }

  agents::Td3Losses low_level_train_step_goal(const std::vector<GoalTransition>& batch, Rng& rng) {
    std::vector<agents::Transition> tr;
    tr.reserve(batch.size());
    for (const auto& g : batch) {
      if (g.g_next != g.g) throw std::invalid_argument("low-level batch contains an unfrozen goal");
      tr.push_back({low_features(g.s, g.anchor, g.g), g.a, g.r_int, low_features(g.s_next, g.anchor, g.g_next), g.done, 1});
    }
    return low_.train_step(tr, rng);
  }

  /// The high level treats its goal as the action of a c_train-step transition.
  std::vector<agents::Transition> high_transitions(const std::vector<CStepTransition>& batch) const {
    std::vector<agents::Transition> tr;
    tr.reserve(batch.size());
    for (const auto& c : batch) {
      if (c.nominal_horizon != cfg_.c_train) throw std::invalid_argument("high-level record horizon differs from c_train");
      tr.push_back({c.s, c.goal, cfg_.high_reward_scale * c.r_sum, c.s_next, c.done, c.horizon});
    }
    return tr;
  }

  agents::Td3Losses high_level_train_step(const std::vector<CStepTransition>& batch, Rng& rng) {
    return high_.train_step(high_transitions(batch), rng);
  }

  LowPolicy low_policy() const {
    return [this](const Vector& f) { return low_.act(f); };
  }

  HrlLosses train_step(Rng& rng) {
    HrlLosses out;
    if (low_buffer_.size() >= cfg_.batch_size) {
      auto batch = low_buffer_.sample(cfg_.batch_size, rng);
      for (auto& g : batch) g = replay::freeze_goal(std::move(g));
      out.low = low_level_train_step_goal(batch, rng);
    }
    if (high_buffer_.size() >= cfg_.batch_size) {
      auto batch = high_buffer_.sample(cfg_.batch_size, rng);
      if (cfg_.offpolicy_relabel) {
        const auto policy = low_policy();
        for (auto& c : batch)
          c = hiro_offpolicy_relabel(c, policy, cfg_.relabel_candidates, cfg_.relabel_sigma, cfg_.goal_box(), rng);
      }
      out.high = high_level_train_step(batch, rng);
    }
    return out;
  }

  std::vector<std::shared_ptr<agents::NetGroup>> groups() const {
    std::vector<std::shared_ptr<agents::NetGroup>> g;
    for (const auto* a : {&high_, &low_})
      for (const auto* h : {&a->heads().actor, &a->heads().critic1, &a->heads().critic2})
        if (std::find(g.begin(), g.end(), h->group()) == g.end()) g.push_back(h->group());
    return g;
  }

 private:
  HrlConfig cfg_;
  int obs_dim_ = 0;
  agents::Td3Agent high_;
  agents::Td3Agent low_;
  replay::ReplayBuffer<GoalTransition> low_buffer_;
  replay::ReplayBuffer<CStepTransition> high_buffer_;
};

}  // namespace hierlab::hrl
