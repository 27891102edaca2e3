#pragma once

#include <utility>

#include "hierlab/envs/point_env.hpp"
#include "hierlab/replay/records.hpp"
#include "hierlab/rng.hpp"

namespace hierlab::envs {

/// Drives one environment through consecutive episodes and logs each
/// episode as a replay::Trajectory. Only success counts as a terminal step;
/// hitting the time limit ends the episode without marking it terminal.
class EpisodeRunner {
 public:
  EpisodeRunner(EnvSpec spec, Rng rng) : spec_(std::move(spec)), rng_(std::move(rng)) { restart(); }

  const EnvSpec& spec() const { return spec_; }
  const EnvState& state() const { return state_; }
  const Vector& obs() const { return obs_; }
  int t() const { return state_.t; }
  bool at_start() const { return state_.t == 0; }
  long episodes_finished() const { return finished_; }

  struct Outcome {
    StepResult result;
    bool episode_over = false;
  };

  /// Steps the environment and records the step. `goal`, `option` and
  /// `anchor` annotate the step for hierarchical consumers.
  Outcome step(const Vector& action, const Vector& goal = {}, int option = -1, const Vec2& anchor = Vec2::Zero()) {
    auto [next, res] = envs::step(spec_, state_, action);
    replay::TrajectoryStep st;
    st.obs = obs_;
    st.action = action;
    st.reward = res.reward;
    st.next_obs = res.observation;
    st.terminal = res.success;
    st.goal = goal;
    st.option = option;
    st.anchor = anchor;
    traj_.push_back(std::move(st));
    state_ = next;
    obs_ = res.observation;
    return {res, res.done};
  }

  /// Hands over the finished episode's log and starts a fresh episode.
  replay::Trajectory finish() {
    replay::Trajectory out = std::move(traj_);
    traj_.clear();
    ++finished_;
    restart();
    return out;
  }

 private:
  void restart() {
    state_ = reset(spec_, rng_);
    obs_ = observe(spec_, state_);
  }

  EnvSpec spec_;
  Rng rng_;
  EnvState state_;
  Vector obs_;
  replay::Trajectory traj_;
  long finished_ = 0;
};

}  // namespace hierlab::envs
