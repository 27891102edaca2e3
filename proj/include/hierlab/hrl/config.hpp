#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "hierlab/agents/dqn.hpp"
#include "hierlab/agents/td3.hpp"
#include "hierlab/replay/buffer.hpp"

namespace hierlab::hrl {

enum class Paradigm { GoalConditioned, GoalConditionedHindsight, Options };

inline std::string_view paradigm_name(Paradigm p) {
  switch (p) {
    case Paradigm::GoalConditioned: return "GoalConditioned";
    case Paradigm::GoalConditionedHindsight: return "GoalConditionedHindsight";
    case Paradigm::Options: return "Options";
  }
  return "?";
}

struct HrlConfig {
  int c_train = 10;
  int c_expl = 10;
  double goal_bound = 2.0;  // goals are displacements in [-goal_bound, goal_bound]^2
  Paradigm paradigm = Paradigm::GoalConditioned;
  int m = 5;                 // options only
  int low_level_nstep = 1;   // reward horizon of the low level (options use 3)
  bool combined_networks = false;

  bool offpolicy_relabel = false;
  int relabel_candidates = 10;
  double relabel_sigma = 1.0;  // std of the Gaussian relabel candidates

  double high_exploration_std = 0.3;  // in half-ranges of the goal box
  double low_exploration_std = 0.3;   // in half-ranges of the action box
  double high_reward_scale = 1.0;

  agents::Td3Config high;
  agents::Td3Config low;
  agents::DqnConfig option_selector;

  std::size_t batch_size = 100;
  std::size_t buffer_capacity = replay::kDefaultCapacity;

  void validate() const {
    if (c_train < 1) throw std::invalid_argument("c_train must be >= 1");
    if (c_expl < 1) throw std::invalid_argument("c_expl must be >= 1");
    if (!(goal_bound > 0) || !std::isfinite(goal_bound)) throw std::invalid_argument("goal_bound must be finite and positive");
    if (m < 1) throw std::invalid_argument("m must be >= 1");
    if (low_level_nstep < 1) throw std::invalid_argument("low_level_nstep must be >= 1");
    if (relabel_candidates < 1) throw std::invalid_argument("relabel_candidates must be >= 1");
    if (!(relabel_sigma >= 0)) throw std::invalid_argument("relabel_sigma must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    high.validate();
    low.validate();
    option_selector.validate();
  }

  agents::ActionBox goal_box() const {
    return {Eigen::VectorXd::Constant(2, -goal_bound), Eigen::VectorXd::Constant(2, goal_bound)};
  }
};

inline agents::ActionBox atomic_box() { return {Eigen::VectorXd::Constant(2, -1.0), Eigen::VectorXd::Constant(2, 1.0)}; }

}  // namespace hierlab::hrl
