#pragma once

#include <vector>

#include <Eigen/Dense>

namespace hierlab::replay {

using Vector = Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;

/// Atomic or multi-step experience. `r` is the undiscounted sum of `horizon`
/// environment rewards and `s_next` the observation `horizon` steps later.
/// `done` marks a true terminal inside the window (no bootstrap).
struct Transition {
  Vector s;
  Vector a;
  double r = 0.0;
  Vector s_next;
  bool done = false;
  int horizon = 1;
};

/// Low-level goal-conditioned experience. Goals are displacements relative to
/// `anchor`; g_next is expressed in the same frame so that freezing the goal
/// keeps the absolute target fixed.
struct GoalTransition {
  Vector s;
  Vector g;
  Vec2 anchor{0, 0};
  Vector a;
  double r_int = 0.0;
  Vector s_next;
  Vector g_next;
  bool done = false;
};

/// Temporally extended high-level experience. `goal` is set for
/// goal-conditioned hierarchies, `option` for the options paradigm.
struct CStepTransition {
  Vector s;
  Vector goal;
  int option = -1;
  double r_sum = 0.0;
  Vector s_next;
  bool done = false;
  int horizon = 1;          // rewards actually summed (shorter at episode end)
  int nominal_horizon = 1;  // requested window length
  // Logged low-level inputs for off-policy goal relabelling.
  std::vector<Vector> window_obs;
  std::vector<Vector> window_actions;
};

/// One environment step of a logged episode.
struct TrajectoryStep {
  Vector obs;
  Vector action;
  double reward = 0.0;
  Vector next_obs;
  bool terminal = false;
  Vector goal;      // high-level goal active at this step (may be empty)
  int option = -1;  // active option (or switching member), -1 if none
  Vec2 anchor{0, 0};
};

using Trajectory = std::vector<TrajectoryStep>;

inline Vec2 xy_of(const Vector& obs) { return obs.head<2>(); }

}  // namespace hierlab::replay
