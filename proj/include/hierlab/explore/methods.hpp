#pragma once

#include <memory>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hierlab/agents/td3.hpp"
#include "hierlab/envs/episode.hpp"
#include "hierlab/explore/ou.hpp"
#include "hierlab/explore/schedule.hpp"
#include "hierlab/hrl/intrinsic.hpp"
#include "hierlab/replay/buffer.hpp"
#include "hierlab/replay/transforms.hpp"

namespace hierlab::explore {

using agents::Td3Agent;
using agents::Transition;
using Vec2 = Eigen::Vector2d;

/// One step of shared experience. `nstep` carries the c_rew-step environment
/// reward; the one-step successor, goal and anchor let a goal-reaching
/// trainer recompute intrinsic rewards.
struct SharedRecord {
  Transition nstep;
  Vector next_obs;
  bool terminal = false;
  Vector goal;
  Vec2 anchor{0, 0};
  int agent = -1;
};

inline agents::ActionBox unit_action_box() { return {Vector::Constant(2, -1.0), Vector::Constant(2, 1.0)}; }

inline std::vector<SharedRecord> shared_records(const replay::Trajectory& traj, int c_rew) {
  std::vector<SharedRecord> out;
  for (std::size_t t = 0; t < traj.size(); ++t)
    out.push_back({replay::nstep_target_inputs(traj, t, c_rew), traj[t].next_obs, traj[t].terminal, traj[t].goal,
                   traj[t].anchor, traj[t].option});
  return out;
}

/// Tab-separated (t, active agent, goal) triples of one logged episode.
inline void write_schedule_log(std::ostream& os, const replay::Trajectory& traj) {
  for (std::size_t t = 0; t < traj.size(); ++t) {
    os << t << '\t' << traj[t].option << '\t';
    for (Eigen::Index i = 0; i < traj[t].goal.size(); ++i) os << (i ? " " : "") << traj[t].goal[i];
    os << '\n';
  }
}

struct ExploreExploitConfig {
  int c_switch = 10;
  int c_rew = 3;
  std::vector<double> weights{0.2, 0.8};  // (explore, exploit)
  double goal_bound = 2.0;
  double ou_sigma = 1.0;
  double ou_damping = 0.8;
  OuForm ou_form = OuForm::reversion;
  double exploration_std = 0.3;
  bool combined_networks = false;
  agents::Td3Config td3;
  std::size_t batch_size = 100;
  std::size_t buffer_capacity = replay::kDefaultCapacity;
};

/// Explore & Exploit: a goal-reaching explorer (index 0) following OU goals
/// and a reward-maximising exploiter (index 1), alternated every c_switch
/// steps, with one replay buffer between them.
class ExploreExploit {
 public:
  static constexpr int kExplore = 0;
  static constexpr int kExploit = 1;

  ExploreExploit(int obs_dim, ExploreExploitConfig cfg, Rng& rng)
      : cfg_(std::move(cfg)), obs_dim_(obs_dim), buffer_(cfg_.buffer_capacity) {
    if (cfg_.weights.size() != 2) throw std::invalid_argument("explore & exploit needs exactly two weights");
    if (cfg_.c_rew < 1) throw std::invalid_argument("c_rew must be >= 1");
    schedule_ = {cfg_.c_switch, cfg_.weights, 0, 0};
    schedule_.validate();
    ou_ = {Vector::Zero(2), cfg_.ou_sigma, cfg_.ou_damping, cfg_.ou_form};
    auto heads = agents::build_td3_family({obs_dim + 2, obs_dim}, {unit_action_box(), unit_action_box()}, cfg_.td3,
                                          cfg_.combined_networks, rng);
    explorer_ = Td3Agent(heads[0], unit_action_box(), cfg_.td3, obs_dim + 2);
    exploiter_ = Td3Agent(heads[1], unit_action_box(), cfg_.td3, obs_dim);
  }

  const ExploreExploitConfig& config() const { return cfg_; }
  const Td3Agent& explorer() const { return explorer_; }
  const Td3Agent& exploiter() const { return exploiter_; }
  Td3Agent& explorer() { return explorer_; }
  Td3Agent& exploiter() { return exploiter_; }
  const replay::ReplayBuffer<SharedRecord>& buffer() const { return buffer_; }
  const SwitchSchedule& schedule() const { return schedule_; }
  const OuState& ou() const { return ou_; }

  /// Current goal handed to the explorer: the OU value clipped to the box.
  Vector current_goal() const { return clip_to_box(ou_.value, cfg_.goal_bound); }

  /// One environment step. Draw order per step: schedule, OU, action noise.
  /// The finished episode is appended to the shared buffer.
  envs::EpisodeRunner::Outcome collect_step(envs::EpisodeRunner& env, Rng& rng) {
    if (env.at_start()) ou_.value.setZero();
    const int who = next_agent(schedule_, env.t(), rng);
    ou_ = ou_next(ou_, rng);
    const Vector goal = current_goal();
    const Vec2 anchor = env.obs().head<2>();
    const Vector a = who == kExplore
                         ? explorer_.select_action(hrl::low_features(env.obs(), anchor, goal), cfg_.exploration_std, rng)
                         : exploiter_.select_action(env.obs(), cfg_.exploration_std, rng);
    auto out = env.step(a, goal, who, anchor);
    if (out.episode_over)
      for (auto& r : shared_records(env.finish(), cfg_.c_rew)) buffer_.append(std::move(r));
    return out;
  }

  static Transition explorer_transition(const SharedRecord& r) {
    return {hrl::low_features(r.nstep.s, r.anchor, r.goal), r.nstep.a,
            hrl::intrinsic_reward(r.anchor, r.goal, r.next_obs.head<2>()), hrl::low_features(r.next_obs, r.anchor, r.goal),
            r.terminal, 1};
  }

  struct Losses {
    std::optional<agents::Td3Losses> explore;
    std::optional<agents::Td3Losses> exploit;
  };

  Losses train_step(Rng& rng) {
    Losses out;
    if (buffer_.size() < cfg_.batch_size) return out;
    std::vector<Transition> ex, en;
    for (const auto& r : buffer_.sample(cfg_.batch_size, rng)) ex.push_back(explorer_transition(r));
    out.explore = explorer_.train_step(ex, rng);
    for (const auto& r : buffer_.sample(cfg_.batch_size, rng)) en.push_back(r.nstep);
    out.exploit = exploiter_.train_step(en, rng);
    return out;
  }

  std::vector<std::shared_ptr<agents::NetGroup>> groups() const {
    std::vector<std::shared_ptr<agents::NetGroup>> g;
    for (const auto* a : {&explorer_, &exploiter_})
      for (const auto* h : {&a->heads().actor, &a->heads().critic1, &a->heads().critic2})
        if (std::find(g.begin(), g.end(), h->group()) == g.end()) g.push_back(h->group());
    return g;
  }

 private:
  ExploreExploitConfig cfg_;
  int obs_dim_ = 0;
  Td3Agent explorer_;
  Td3Agent exploiter_;
  replay::ReplayBuffer<SharedRecord> buffer_;
  SwitchSchedule schedule_;
  OuState ou_;
};

struct SwitchingEnsembleConfig {
  int members = 5;
  int c_switch = 10;
  int c_rew = 3;
  double exploration_std = 0.3;
  bool combined_networks = false;
  agents::Td3Config td3;
  std::size_t batch_size = 100;
  std::size_t buffer_capacity = replay::kDefaultCapacity;
};

/// Several reward-maximising agents, one drawn uniformly every c_switch
/// steps to act; all train on the common buffer.
class SwitchingEnsemble {
 public:
  SwitchingEnsemble(int obs_dim, SwitchingEnsembleConfig cfg, Rng& rng)
      : cfg_(std::move(cfg)), buffer_(cfg_.buffer_capacity) {
    if (cfg_.members < 1) throw std::invalid_argument("ensemble needs at least one member");
    if (cfg_.c_rew < 1) throw std::invalid_argument("c_rew must be >= 1");
    schedule_ = SwitchSchedule::uniform(cfg_.members, cfg_.c_switch);
    schedule_.validate();
    const auto k = static_cast<std::size_t>(cfg_.members);
    auto heads = agents::build_td3_family(std::vector<int>(k, obs_dim), std::vector<agents::ActionBox>(k, unit_action_box()),
                                          cfg_.td3, cfg_.combined_networks, rng);
    for (auto& h : heads) members_.emplace_back(std::move(h), unit_action_box(), cfg_.td3, obs_dim);
  }

  const SwitchingEnsembleConfig& config() const { return cfg_; }
  int size() const { return cfg_.members; }
  const Td3Agent& member(int i) const { return members_.at(static_cast<std::size_t>(i)); }
  Td3Agent& member(int i) { return members_.at(static_cast<std::size_t>(i)); }
  const replay::ReplayBuffer<Transition>& buffer() const { return buffer_; }
  const SwitchSchedule& schedule() const { return schedule_; }

  envs::EpisodeRunner::Outcome collect_step(envs::EpisodeRunner& env, Rng& rng) {
    const int who = next_agent(schedule_, env.t(), rng);
    const Vector a = members_[static_cast<std::size_t>(who)].select_action(env.obs(), cfg_.exploration_std, rng);
    auto out = env.step(a, {}, who);
    if (out.episode_over) {
      const auto traj = env.finish();
      for (std::size_t t = 0; t < traj.size(); ++t) buffer_.append(replay::nstep_target_inputs(traj, t, cfg_.c_rew));
    }
    return out;
  }

  std::vector<agents::Td3Losses> train_step(Rng& rng) {
    std::vector<agents::Td3Losses> out;
    if (buffer_.size() < cfg_.batch_size) return out;
    for (auto& m : members_) out.push_back(m.train_step(buffer_.sample(cfg_.batch_size, rng), rng));
    return out;
  }

  std::vector<std::shared_ptr<agents::NetGroup>> groups() const {
    std::vector<std::shared_ptr<agents::NetGroup>> g;
    for (const auto& a : members_)
      for (const auto* h : {&a.heads().actor, &a.heads().critic1, &a.heads().critic2})
        if (std::find(g.begin(), g.end(), h->group()) == g.end()) g.push_back(h->group());
    return g;
  }

 private:
  SwitchingEnsembleConfig cfg_;
  std::vector<Td3Agent> members_;
  replay::ReplayBuffer<Transition> buffer_;
  SwitchSchedule schedule_;
};

}  // namespace hierlab::explore
