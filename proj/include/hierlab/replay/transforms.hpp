#pragma once

#include <algorithm>
#include <stdexcept>

#include "hierlab/hrl/intrinsic.hpp"
#include "hierlab/replay/records.hpp"

namespace hierlab::replay {

namespace detail {

// Number of steps in the window starting at t: stops after c steps, after a
// terminal step, or at the end of the logged episode.
inline int window_length(const Trajectory& traj, std::size_t t, int c) {
  if (c < 1) throw std::invalid_argument("horizon must be >= 1");
  if (t >= traj.size()) throw std::out_of_range("window start outside trajectory");
  int k = 0;
  while (k < c && t + static_cast<std::size_t>(k) < traj.size()) {
    ++k;
    if (traj[t + static_cast<std::size_t>(k) - 1].terminal) break;
  }
  return k;
}

}  // namespace detail

/// Temporally extended transition (s_t, g_t, sum of c rewards, s_{t+c}).
inline CStepTransition aggregate_cstep(const Trajectory& traj, std::size_t t, int c) {
  const int k = detail::window_length(traj, t, c);
  CStepTransition out;
  out.s = traj[t].obs;
  out.goal = traj[t].goal;
  out.option = traj[t].option;
  out.nominal_horizon = c;
  out.horizon = k;
  for (int i = 0; i < k; ++i) {
    const auto& step = traj[t + static_cast<std::size_t>(i)];
    out.r_sum += step.reward;
    out.window_obs.push_back(step.obs);
    out.window_actions.push_back(step.action);
  }
  const auto& last = traj[t + static_cast<std::size_t>(k) - 1];
  out.s_next = last.next_obs;
  out.done = last.terminal;
  return out;
}

/// Multi-step reward record keyed to the atomic action a_t.
inline Transition nstep_target_inputs(const Trajectory& traj, std::size_t t, int c_rew) {
  const int k = detail::window_length(traj, t, c_rew);
  Transition out;
  out.s = traj[t].obs;
  out.a = traj[t].action;
  for (int i = 0; i < k; ++i) out.r += traj[t + static_cast<std::size_t>(i)].reward;
  const auto& last = traj[t + static_cast<std::size_t>(k) - 1];
  out.s_next = last.next_obs;
  out.done = last.terminal;
  out.horizon = k;
  return out;
}

inline GoalTransition freeze_goal(GoalTransition t) {
  t.g_next = t.g;
  return t;
}

/// Replaces both goals by the displacement actually achieved and recomputes
/// the intrinsic reward against it.
inline GoalTransition hindsight_relabel(GoalTransition t, const Vec2& achieved_delta) {
  t.g = achieved_delta;
  t.g_next = achieved_delta;
  t.r_int = hrl::intrinsic_reward(t.anchor, achieved_delta, xy_of(t.s_next));
  return t;
}

}  // namespace hierlab::replay
