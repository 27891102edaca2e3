#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hierlab/rng.hpp"

namespace hierlab::explore {

/// Temporally extended agent selection: a member is drawn from `weights`
/// whenever t is a multiple of c_switch and kept in between.
struct SwitchSchedule {
  int c_switch = 10;
  std::vector<double> weights;
  int current_index = 0;
  long switches = 0;

  static SwitchSchedule uniform(int members, int c_switch) {
    if (members < 1) throw std::invalid_argument("schedule needs at least one member");
    return {c_switch, std::vector<double>(static_cast<std::size_t>(members), 1.0 / members), 0, 0};
  }

  void validate() const {
    if (c_switch < 1) throw std::invalid_argument("c_switch must be >= 1");
    if (weights.empty()) throw std::invalid_argument("schedule weights are empty");
    double sum = 0;
    for (double w : weights) {
      if (!(w >= 0) || !std::isfinite(w)) throw std::invalid_argument("schedule weights must be non-negative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("schedule weights must sum to 1");
  }
};

inline int draw_index(const std::vector<double>& weights, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0;
  int last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0) continue;
    last_positive = static_cast<int>(i);
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  return last_positive;  // round-off in the cumulative sum
}

inline int next_agent(SwitchSchedule& s, long t, Rng& rng) {
  if (t < 0) throw std::invalid_argument("next_agent: negative time");
  s.validate();
  if (t % s.c_switch == 0) {
    s.current_index = draw_index(s.weights, rng);
    ++s.switches;
  }
  return s.current_index;
}

}  // namespace hierlab::explore
