#pragma once

#include <Eigen/Dense>

namespace hierlab::hrl {

/// Goals are x,y displacements relative to the position the agent held when
/// the goal was issued; the low level is rewarded by its distance to
/// anchor + goal.
inline double intrinsic_reward(const Eigen::Vector2d& anchor_xy, const Eigen::Vector2d& goal,
                               const Eigen::Vector2d& next_xy) {
  return -((anchor_xy + goal) - next_xy).norm();
}

/// Low-level input: the observation followed by the displacement still to
/// cover, anchor + goal - current position.
inline Eigen::VectorXd low_features(const Eigen::VectorXd& obs, const Eigen::Vector2d& anchor_xy,
                                    const Eigen::VectorXd& goal) {
  Eigen::VectorXd f(obs.size() + 2);
  f << obs, anchor_xy + goal.head<2>() - obs.head<2>();
  return f;
}

}  // namespace hierlab::hrl
