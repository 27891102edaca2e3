#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "hierlab/agents/td3.hpp"
#include "hierlab/envs/episode.hpp"
#include "hierlab/explore/methods.hpp"
#include "hierlab/harness/config.hpp"
#include "hierlab/hrl/goal_agent.hpp"
#include "hierlab/hrl/options_agent.hpp"
#include "hierlab/replay/buffer.hpp"
#include "hierlab/replay/transforms.hpp"
#include "hierlab/shadow/rig.hpp"

namespace hierlab::harness {

using approx::Vector;

/// Greedy, noise-free behaviour of a trained method. Policies may keep
/// per-episode state (the current goal or option), cleared by reset().
class EvalPolicy {
 public:
  virtual ~EvalPolicy() = default;
  virtual void reset() {}
  virtual Vector act(const Vector& obs, int t, Rng& rng) = 0;
};

/// A method as the run loop sees it: it owns its training environment(s)
/// and replay buffers.
class MethodRunner {
 public:
  virtual ~MethodRunner() = default;
  /// One environment step of experience collection.
  virtual void collect_step(Rng& rng) = 0;
  virtual void train_step(Rng& rng) = 0;
  virtual std::unique_ptr<EvalPolicy> eval_policy() const = 0;
  virtual std::vector<std::shared_ptr<agents::NetGroup>> groups() const = 0;
  /// Records held across all replay buffers.
  virtual std::size_t stored_records() const = 0;
};

inline agents::Td3Config td3_config(const ExperimentConfig& c) {
  agents::Td3Config t;
  t.gamma = c.gamma;
  t.tau = c.tau;
  t.policy_delay = c.policy_delay;
  t.smoothing_std = c.smoothing_std;
  t.smoothing_clip = c.smoothing_clip;
  t.exploration_std = c.exploration_std;
  t.actor_lr = c.actor_lr;
  t.preact_penalty = c.actor_preact_penalty;
  t.critic_lr = c.critic_lr;
  t.hidden = c.hidden;
  t.discount = c.discount_exponent;
  return t;
}

inline hrl::HrlConfig hrl_config(const ExperimentConfig& c) {
  hrl::HrlConfig h;
  h.c_train = c.c_train;
  h.c_expl = c.c_expl;
  h.goal_bound = c.goal_bound;
  h.paradigm = c.method == Method::Options            ? hrl::Paradigm::Options
               : c.method == Method::GoalHRLHindsight ? hrl::Paradigm::GoalConditionedHindsight
                                                      : hrl::Paradigm::GoalConditioned;
  h.m = c.option_count;
  h.low_level_nstep = c.method == Method::Options ? c.option_nstep : 1;
  h.combined_networks = c.combined_networks;
  h.offpolicy_relabel = c.offpolicy_relabel;
  h.high_exploration_std = c.high_exploration_std;
  h.low_exploration_std = c.exploration_std;
  h.high_reward_scale = c.high_reward_scale;
  h.high = h.low = td3_config(c);
  h.option_selector.gamma = c.gamma;
  h.option_selector.epsilon = c.option_epsilon;
  h.option_selector.learning_rate = c.critic_lr;
  h.option_selector.tau = c.tau;
  h.option_selector.hidden = c.hidden;
  h.option_selector.discount = c.discount_exponent;
  h.batch_size = static_cast<std::size_t>(c.batch_size);
  h.buffer_capacity = static_cast<std::size_t>(c.buffer_capacity);
  return h;
}

namespace detail {

class Td3Greedy : public EvalPolicy {
 public:
  explicit Td3Greedy(const agents::Td3Agent& a) : agent_(a) {}
  Vector act(const Vector& obs, int, Rng&) override { return agent_.act(obs); }

 private:
  const agents::Td3Agent& agent_;
};

template <typename Agent>
class HierarchyGreedy : public EvalPolicy {
 public:
  explicit HierarchyGreedy(const Agent& a) : agent_(a) {}
  void reset() override { hs_ = {}; }
  Vector act(const Vector& obs, int, Rng& rng) override {
    auto [a, next] = agent_.act_hierarchy(obs, hs_, false, rng);
    hs_ = std::move(next);
    return a;
  }

 private:
  const Agent& agent_;
  hrl::HierarchyState hs_;
};

template <typename T>
std::vector<std::shared_ptr<agents::NetGroup>> td3_groups(const std::vector<const T*>& agents) {
  std::vector<std::shared_ptr<agents::NetGroup>> g;
  for (const auto* a : agents)
    for (const auto* h : {&a->heads().actor, &a->heads().critic1, &a->heads().critic2})
      if (std::find(g.begin(), g.end(), h->group()) == g.end()) g.push_back(h->group());
  return g;
}

/// Flat TD3 with Gaussian action noise and c_rew-step targets.
class FlatRunner : public MethodRunner {
 public:
  FlatRunner(const ExperimentConfig& c, const envs::EnvSpec& spec, std::uint64_t seed, Rng& init)
      : env_(spec, Rng(seed, "env")),
        agent_(agents::Td3Agent::make(envs::observation_dim(spec), hrl::atomic_box(), td3_config(c), init)),
        buffer_(static_cast<std::size_t>(c.buffer_capacity)),
        c_rew_(c.effective_c_rew()),
        batch_(static_cast<std::size_t>(c.batch_size)),
        noise_(c.exploration_std) {}

  void collect_step(Rng& rng) override {
    if (env_.step(agent_.select_action(env_.obs(), noise_, rng)).episode_over) {
      const auto traj = env_.finish();
      for (std::size_t t = 0; t < traj.size(); ++t) buffer_.append(replay::nstep_target_inputs(traj, t, c_rew_));
    }
  }
  void train_step(Rng& rng) override {
    if (buffer_.size() >= batch_) agent_.train_step(buffer_.sample(batch_, rng), rng);
  }
  std::unique_ptr<EvalPolicy> eval_policy() const override { return std::make_unique<Td3Greedy>(agent_); }
  std::vector<std::shared_ptr<agents::NetGroup>> groups() const override { return td3_groups<agents::Td3Agent>({&agent_}); }
  std::size_t stored_records() const override { return buffer_.size(); }

 private:
  envs::EpisodeRunner env_;
  agents::Td3Agent agent_;
  replay::ReplayBuffer<agents::Transition> buffer_;
  int c_rew_;
  std::size_t batch_;
  double noise_;
};

class GoalRunner : public MethodRunner {
 public:
  GoalRunner(const ExperimentConfig& c, const envs::EnvSpec& spec, std::uint64_t seed, Rng& init)
      : env_(spec, Rng(seed, "env")), agent_(envs::observation_dim(spec), hrl_config(c), init) {}

  void collect_step(Rng& rng) override {
    if (env_.at_start()) hs_ = {};
    auto [a, next] = agent_.act_hierarchy(env_.obs(), hs_, true, rng);
    hs_ = std::move(next);
    if (env_.step(a, hs_.goal, -1, hs_.anchor).episode_over) agent_.ingest(env_.finish());
  }
  void train_step(Rng& rng) override { agent_.train_step(rng); }
  std::unique_ptr<EvalPolicy> eval_policy() const override {
    return std::make_unique<HierarchyGreedy<hrl::GoalConditionedAgent>>(agent_);
  }
  std::vector<std::shared_ptr<agents::NetGroup>> groups() const override { return agent_.groups(); }
  std::size_t stored_records() const override { return agent_.low_buffer().size() + agent_.high_buffer().size(); }

 private:
  envs::EpisodeRunner env_;
  hrl::GoalConditionedAgent agent_;
  hrl::HierarchyState hs_;
};

class OptionsRunner : public MethodRunner {
 public:
  OptionsRunner(const ExperimentConfig& c, const envs::EnvSpec& spec, std::uint64_t seed, Rng& init)
      : env_(spec, Rng(seed, "env")), agent_(envs::observation_dim(spec), hrl_config(c), init) {}

  void collect_step(Rng& rng) override {
    if (env_.at_start()) hs_ = {};
    auto [a, next] = agent_.act_hierarchy(env_.obs(), hs_, true, rng);
    hs_ = std::move(next);
    if (env_.step(a, {}, hs_.option, hs_.anchor).episode_over) agent_.ingest(env_.finish());
  }
  void train_step(Rng& rng) override { agent_.train_step(rng); }
  std::unique_ptr<EvalPolicy> eval_policy() const override {
    return std::make_unique<HierarchyGreedy<hrl::OptionsAgent>>(agent_);
  }
  std::vector<std::shared_ptr<agents::NetGroup>> groups() const override { return agent_.groups(); }
  std::size_t stored_records() const override {
    std::size_t n = agent_.high_buffer().size();
    for (int i = 0; i < agent_.option_count(); ++i) n += agent_.option_buffer(i).size();
    return n;
  }

 private:
  envs::EpisodeRunner env_;
  hrl::OptionsAgent agent_;
  hrl::HierarchyState hs_;
};

/// The shadow agent is the one evaluated.
class ShadowRunner : public MethodRunner {
 public:
  ShadowRunner(const ExperimentConfig& c, const envs::EnvSpec& spec, std::uint64_t seed, Rng& init)
      : hrl_env_(spec, Rng(seed, "env")),
        shadow_env_(spec, Rng(seed, "env_shadow")),
        rig_(envs::observation_dim(spec), hrl_config(c), shadow_config(c), init) {}

  static shadow::ShadowConfig shadow_config(const ExperimentConfig& c) {
    shadow::ShadowConfig s;
    s.mix_fraction = c.mix_fraction;
    s.c_rew = c.c_rew;
    s.exploration_std = c.exploration_std;
    s.td3 = td3_config(c);
    s.batch_size = static_cast<std::size_t>(c.batch_size);
    s.buffer_capacity = static_cast<std::size_t>(c.buffer_capacity);
    return s;
  }

  void collect_step(Rng& rng) override { rig_.collect_step(hrl_env_, shadow_env_, rng); }
  void train_step(Rng& rng) override { rig_.train_step(rng); }
  std::unique_ptr<EvalPolicy> eval_policy() const override { return std::make_unique<Td3Greedy>(rig_.shadow_agent()); }
  std::vector<std::shared_ptr<agents::NetGroup>> groups() const override { return rig_.groups(); }
  std::size_t stored_records() const override {
    return rig_.hrl_buffer().size() + rig_.shadow_buffer().size() + rig_.hrl_agent().low_buffer().size() +
           rig_.hrl_agent().high_buffer().size();
  }

 private:
  envs::EpisodeRunner hrl_env_;
  envs::EpisodeRunner shadow_env_;
  shadow::ShadowRig rig_;
};

/// The exploiter is the one evaluated.
class ExploreExploitRunner : public MethodRunner {
 public:
  ExploreExploitRunner(const ExperimentConfig& c, const envs::EnvSpec& spec, std::uint64_t seed, Rng& init)
      : env_(spec, Rng(seed, "env")), ee_(envs::observation_dim(spec), ee_config(c), init) {}

  static explore::ExploreExploitConfig ee_config(const ExperimentConfig& c) {
    explore::ExploreExploitConfig e;
    e.c_switch = c.c_switch;
    e.c_rew = c.c_rew;
    e.weights = {c.explore_weight, 1.0 - c.explore_weight};
    e.goal_bound = c.goal_bound;
    e.ou_sigma = c.ou_sigma;
    e.ou_damping = c.ou_damping;
    e.ou_form = c.ou_form;
    e.exploration_std = c.exploration_std;
    e.combined_networks = c.combined_networks;
    e.td3 = td3_config(c);
    e.batch_size = static_cast<std::size_t>(c.batch_size);
    e.buffer_capacity = static_cast<std::size_t>(c.buffer_capacity);
    return e;
  }

  void collect_step(Rng& rng) override { ee_.collect_step(env_, rng); }
  void train_step(Rng& rng) override { ee_.train_step(rng); }
  std::unique_ptr<EvalPolicy> eval_policy() const override { return std::make_unique<Td3Greedy>(ee_.exploiter()); }
  std::vector<std::shared_ptr<agents::NetGroup>> groups() const override { return ee_.groups(); }
  std::size_t stored_records() const override { return ee_.buffer().size(); }

 private:
  envs::EpisodeRunner env_;
  explore::ExploreExploit ee_;
};

/// Evaluated with the same switching schedule, each member acting greedily.
class EnsembleRunner : public MethodRunner {
 public:
  EnsembleRunner(const ExperimentConfig& c, const envs::EnvSpec& spec, std::uint64_t seed, Rng& init)
      : env_(spec, Rng(seed, "env")), se_(envs::observation_dim(spec), se_config(c), init) {}

  static explore::SwitchingEnsembleConfig se_config(const ExperimentConfig& c) {
    explore::SwitchingEnsembleConfig e;
    e.members = c.ensemble_members;
    e.c_switch = c.c_switch;
    e.c_rew = c.c_rew;
    e.exploration_std = c.exploration_std;
    e.combined_networks = c.combined_networks;
    e.td3 = td3_config(c);
    e.batch_size = static_cast<std::size_t>(c.batch_size);
    e.buffer_capacity = static_cast<std::size_t>(c.buffer_capacity);
    return e;
  }

  class Policy : public EvalPolicy {
   public:
    explicit Policy(const explore::SwitchingEnsemble& se)
        : se_(se), schedule_(explore::SwitchSchedule::uniform(se.size(), se.config().c_switch)) {}
    void reset() override { schedule_.current_index = 0; }
    Vector act(const Vector& obs, int t, Rng& rng) override {
      return se_.member(explore::next_agent(schedule_, t, rng)).act(obs);
    }

   private:
    const explore::SwitchingEnsemble& se_;
    explore::SwitchSchedule schedule_;
  };

  void collect_step(Rng& rng) override { se_.collect_step(env_, rng); }
  void train_step(Rng& rng) override { se_.train_step(rng); }
  std::unique_ptr<EvalPolicy> eval_policy() const override { return std::make_unique<Policy>(se_); }
  std::vector<std::shared_ptr<agents::NetGroup>> groups() const override { return se_.groups(); }
  std::size_t stored_records() const override { return se_.buffer().size(); }

 private:
  envs::EpisodeRunner env_;
  explore::SwitchingEnsemble se_;
};

}  // namespace detail

/// Builds the method for one seed; network initialisation draws from the
/// seed's "init" substream and each training environment from its own.
inline std::unique_ptr<MethodRunner> build_method(const ExperimentConfig& c, const envs::EnvSpec& spec, std::uint64_t seed) {
  Rng init(seed, "init");
  switch (c.method) {
    case Method::Flat:
    case Method::FlatNStep: return std::make_unique<detail::FlatRunner>(c, spec, seed, init);
    case Method::GoalHRL:
    case Method::GoalHRLHindsight: return std::make_unique<detail::GoalRunner>(c, spec, seed, init);
    case Method::Options: return std::make_unique<detail::OptionsRunner>(c, spec, seed, init);
    case Method::Shadow: return std::make_unique<detail::ShadowRunner>(c, spec, seed, init);
    case Method::ExploreExploit: return std::make_unique<detail::ExploreExploitRunner>(c, spec, seed, init);
    case Method::SwitchingEnsemble: return std::make_unique<detail::EnsembleRunner>(c, spec, seed, init);
  }
  throw std::logic_error("build_method: unhandled method");
}

}  // namespace hierlab::harness
