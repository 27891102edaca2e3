#pragma once

#include <stdexcept>
#include <vector>

#include "hierlab/agents/common.hpp"
#include "hierlab/agents/net_group.hpp"
#include "hierlab/replay/records.hpp"
#include "hierlab/rng.hpp"

namespace hierlab::agents {

using replay::CStepTransition;

struct DqnConfig {
  double gamma = 0.99;
  double epsilon = 0.5;
  double learning_rate = 1e-3;
  double tau = 0.005;
  int target_update_period = 1;  // train steps between polyak updates
  std::vector<int> hidden{300, 300};
  DiscountExponent discount = DiscountExponent::horizon;

  void validate() const {
    if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("gamma must lie in (0, 1)");
    if (!(epsilon >= 0 && epsilon <= 1)) throw std::invalid_argument("epsilon must lie in [0, 1]");
    if (!(learning_rate > 0)) throw std::invalid_argument("learning rate must be positive");
    if (!(tau >= 0 && tau <= 1)) throw std::invalid_argument("tau must lie in [0, 1]");
    if (target_update_period < 1) throw std::invalid_argument("target_update_period must be >= 1");
  }
};

/// Index of the largest entry; ties go to the lowest index.
inline int argmax_lowest(const Vector& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<int>(i);
  return best;
}

/// Double DQN over a discrete action set. Records are CStepTransitions whose
/// `option` field is the action taken.
class DqnAgent {
 public:
  DqnAgent() = default;

  DqnAgent(NetHandle q, DqnConfig cfg) : q_(std::move(q)), cfg_(std::move(cfg)) { cfg_.validate(); }

  static DqnAgent make(int obs_dim, int actions, DqnConfig cfg, Rng& rng) {
    if (actions < 1) throw std::invalid_argument("DqnAgent: need at least one action");
    approx::Network net(with_sizes(obs_dim, cfg.hidden, actions), 1, approx::OutputSquash::identity(), rng);
    return DqnAgent(NetHandle::solo(std::move(net), cfg.learning_rate), std::move(cfg));
  }

  int action_count() const { return q_.output_dim(); }
  int obs_dim() const { return q_.input_dim(); }
  const DqnConfig& config() const { return cfg_; }
  void set_epsilon(double e) {
    if (!(e >= 0 && e <= 1)) throw std::invalid_argument("epsilon must lie in [0, 1]");
    cfg_.epsilon = e;
  }
  const NetHandle& q() const { return q_; }
  NetHandle& q() { return q_; }

  Vector values(const Vector& obs) const { return q_.forward(obs); }
  int greedy(const Vector& obs) const { return argmax_lowest(values(obs)); }

  int select_action(const Vector& obs, Rng& rng) const {
    if (cfg_.epsilon > 0 && rng.uniform() < cfg_.epsilon) return static_cast<int>(rng.index(static_cast<std::size_t>(action_count())));
    return greedy(obs);
  }

  Vector targets(const std::vector<CStepTransition>& batch) const {
    const Matrix sn = stack_columns(batch, [](const CStepTransition& t) -> const Vector& { return t.s_next; });
    const Matrix online = q_.forward(sn);
    const Matrix target = q_.forward_target(sn);
    Vector y(static_cast<Eigen::Index>(batch.size()));
    for (std::size_t j = 0; j < batch.size(); ++j) {
      const auto& t = batch[j];
      const auto jj = static_cast<Eigen::Index>(j);
      double boot = 0.0;
      if (!t.done) {
        const int a_star = argmax_lowest(online.col(jj));
        boot = bootstrap_discount(cfg_.gamma, t.horizon, cfg_.discount) * target(a_star, jj);
      }
      y[jj] = t.r_sum + boot;
    }
    return y;
  }

  /// One squared-error regression step; returns the mean loss before it.
  double train_step(const std::vector<CStepTransition>& batch) {
    if (batch.empty()) throw std::invalid_argument("dqn train_step: empty batch");
    for (const auto& t : batch)
      if (t.option < 0 || t.option >= action_count()) throw std::out_of_range("dqn train_step: action index out of range");
    const Vector y = targets(batch);
    const Matrix s = stack_columns(batch, [](const CStepTransition& t) -> const Vector& { return t.s; });
    approx::Tape tape;
    const Matrix q = q_.forward(s, &tape);
    const auto n = static_cast<double>(batch.size());
    Matrix up = Matrix::Zero(q.rows(), q.cols());
    double loss = 0.0;
    for (std::size_t j = 0; j < batch.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double err = q(batch[j].option, jj) - y[jj];
      loss += err * err / n;
      up(batch[j].option, jj) = 2.0 * err / n;
    }
    q_.apply(tape, up);
    if (++updates_ % cfg_.target_update_period == 0) q_.polyak(cfg_.tau);
    return loss;
  }

 private:
  static std::vector<int> with_sizes(int in, const std::vector<int>& hidden, int out) {
    std::vector<int> s{in};
    s.insert(s.end(), hidden.begin(), hidden.end());
    s.push_back(out);
    return s;
  }

  NetHandle q_;
  DqnConfig cfg_;
  long updates_ = 0;
};

}  // namespace hierlab::agents
