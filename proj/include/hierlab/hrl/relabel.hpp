#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "hierlab/agents/td3.hpp"
#include "hierlab/hrl/intrinsic.hpp"
#include "hierlab/replay/records.hpp"
#include "hierlab/rng.hpp"

namespace hierlab::hrl {

using replay::CStepTransition;
using Vector = Eigen::VectorXd;

/// Deterministic low-level policy over low_features() inputs.
using LowPolicy = std::function<Vector(const Vector&)>;

/// Candidate goals for off-policy correction: the stored goal, the achieved
/// displacement, and `count - 2` Gaussian draws around the latter. All but
/// the stored goal are clipped to the goal box.
inline std::vector<Vector> relabel_candidates(const CStepTransition& rec, int count, double sigma,
                                              const agents::ActionBox& goal_box, Rng& rng) {
  if (count < 1) throw std::invalid_argument("relabel: need at least one candidate");
  if (rec.goal.size() != 2) throw std::invalid_argument("relabel: record has no goal");
  std::vector<Vector> out{rec.goal};
  if (count == 1) return out;
  const Vector achieved = rec.s_next.head<2>() - rec.s.head<2>();
  out.push_back(goal_box.clip(achieved));
  for (int i = 2; i < count; ++i) {
    Vector g(2);
    g << rng.normal(achieved[0], sigma), rng.normal(achieved[1], sigma);
    out.push_back(goal_box.clip(g));
  }
  return out;
}

/// Log-likelihood proxy of the logged actions under `goal`, held fixed over
/// the window: -sum_k |pi(s_k, g) - a_k|^2.
inline double relabel_score(const CStepTransition& rec, const Vector& goal, const LowPolicy& policy) {
  const Eigen::Vector2d anchor = rec.s.head<2>();
  double score = 0.0;
  for (std::size_t k = 0; k < rec.window_obs.size(); ++k)
    score -= (policy(low_features(rec.window_obs[k], anchor, goal)) - rec.window_actions[k]).squaredNorm();
  return score;
}

/// Returns `rec` with its goal replaced by the best-scoring candidate. The
/// first candidate wins ties, so the stored goal survives unless beaten.
inline CStepTransition hiro_offpolicy_relabel(const CStepTransition& rec, const LowPolicy& policy, int count,
                                              double sigma, const agents::ActionBox& goal_box, Rng& rng) {
  if (rec.window_obs.empty() || rec.window_obs.size() != rec.window_actions.size())
    throw std::invalid_argument("relabel: record lacks logged low-level actions");
  const auto cands = relabel_candidates(rec, count, sigma, goal_box, rng);
  std::size_t best = 0;
  double best_score = relabel_score(rec, cands[0], policy);
  for (std::size_t i = 1; i < cands.size(); ++i) {
    const double s = relabel_score(rec, cands[i], policy);
    if (s > best_score) {
      best = i;
      best_score = s;
    }
  }
  CStepTransition out = rec;
  out.goal = cands[best];
  return out;
}

}  // namespace hierlab::hrl
