#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <vector>

#include "hierlab/agents/common.hpp"
#include "hierlab/agents/net_group.hpp"
#include "hierlab/replay/records.hpp"
#include "hierlab/rng.hpp"

namespace hierlab::agents {

using replay::Transition;

struct Td3Config {
  double gamma = 0.99;
  double tau = 0.005;
  int policy_delay = 2;
  double smoothing_std = 0.2;   // target policy smoothing, in half-ranges
  double smoothing_clip = 0.5;  // likewise
  double exploration_std = 0.3;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  std::vector<int> hidden{300, 300};
  DiscountExponent discount = DiscountExponent::horizon;
  double preact_penalty = 0.0;  // weight of mean ||z||^2 on the actor's pre-tanh output

  void validate() const {
    if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("gamma must lie in (0, 1)");
    if (!(tau >= 0 && tau <= 1)) throw std::invalid_argument("tau must lie in [0, 1]");
    if (policy_delay < 1) throw std::invalid_argument("policy_delay must be >= 1");
    if (smoothing_std < 0 || smoothing_clip < 0 || exploration_std < 0)
      throw std::invalid_argument("noise scales must be non-negative");
    if (!(actor_lr > 0) || !(critic_lr > 0)) throw std::invalid_argument("learning rates must be positive");
    if (!(preact_penalty >= 0)) throw std::invalid_argument("preact_penalty must be non-negative");
    for (int h : hidden)
      if (h < 1) throw std::invalid_argument("hidden sizes must be positive");
  }
};

/// The three online networks of one TD3 agent (targets live in the groups).
struct Td3Heads {
  NetHandle actor;
  NetHandle critic1;
  NetHandle critic2;
};

struct ActionBox {
  Vector low;
  Vector high;

  Vector half_range() const { return (high - low) / 2; }
  Vector clip(const Vector& a) const { return a.cwiseMax(low).cwiseMin(high); }
};

inline std::vector<int> with_hidden(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

/// Networks for a family of TD3 agents. With `combined` every role (actor,
/// critic 1, critic 2) is a single network with one head per member; inputs
/// are padded to the widest member. Otherwise each member gets its own.
inline std::vector<Td3Heads> build_td3_family(const std::vector<int>& obs_dims, const std::vector<ActionBox>& boxes,
                                              const Td3Config& cfg, bool combined, Rng& rng) {
  if (obs_dims.empty() || obs_dims.size() != boxes.size()) throw std::invalid_argument("build_td3_family: bad member list");
  const int act_dim = static_cast<int>(boxes.front().low.size());
  for (const auto& b : boxes) {
    if (b.low.size() != act_dim || b.high.size() != act_dim) throw std::invalid_argument("action boxes differ in size");
    if (!(b.low.array() < b.high.array()).all() || !b.low.allFinite() || !b.high.allFinite())
      throw std::invalid_argument("action box needs finite low < high");
  }
  std::vector<Td3Heads> out;
  if (!combined) {
    for (std::size_t i = 0; i < obs_dims.size(); ++i) {
      const int d = obs_dims[i];
      approx::Network actor(with_hidden(d, cfg.hidden, act_dim), 1,
                            approx::OutputSquash::tanh_box(boxes[i].low, boxes[i].high), rng);
      approx::Network q1(with_hidden(d + act_dim, cfg.hidden, 1), 1, approx::OutputSquash::identity(), rng);
      approx::Network q2(with_hidden(d + act_dim, cfg.hidden, 1), 1, approx::OutputSquash::identity(), rng);
      out.push_back({NetHandle::solo(std::move(actor), cfg.actor_lr), NetHandle::solo(std::move(q1), cfg.critic_lr),
                     NetHandle::solo(std::move(q2), cfg.critic_lr)});
    }
    return out;
  }
  const int k = static_cast<int>(obs_dims.size());
  const int widest = *std::max_element(obs_dims.begin(), obs_dims.end());
  std::vector<Vector> lo, hi;
  for (const auto& b : boxes) {
    lo.push_back(b.low);
    hi.push_back(b.high);
  }
  auto actor = std::make_shared<NetGroup>(
      approx::Network(with_hidden(widest, cfg.hidden, act_dim), k, approx::OutputSquash::tanh_box_per_head(lo, hi), rng),
      cfg.actor_lr);
  auto q1 = std::make_shared<NetGroup>(
      approx::Network(with_hidden(widest + act_dim, cfg.hidden, 1), k, approx::OutputSquash::identity(), rng),
      cfg.critic_lr);
  auto q2 = std::make_shared<NetGroup>(
      approx::Network(with_hidden(widest + act_dim, cfg.hidden, 1), k, approx::OutputSquash::identity(), rng),
      cfg.critic_lr);
  for (int i = 0; i < k; ++i) {
    const int d = obs_dims[static_cast<std::size_t>(i)];
    // critic inputs are [obs ; action]; pad the observation part only
    out.push_back({NetHandle(actor, i, d), NetHandle(q1, i, widest + act_dim), NetHandle(q2, i, widest + act_dim)});
  }
  return out;
}

struct Td3Losses {
  double critic = 0.0;
  std::optional<double> actor;
};

/// Twin-critic deterministic actor-critic with delayed policy updates and
/// target policy smoothing.
class Td3Agent {
 public:
  Td3Agent() = default;

  Td3Agent(Td3Heads heads, ActionBox box, Td3Config cfg, int obs_dim)
      : nets_(std::move(heads)), box_(std::move(box)), cfg_(std::move(cfg)), obs_dim_(obs_dim) {
    cfg_.validate();
    if (nets_.actor.input_dim() != obs_dim_) throw std::invalid_argument("Td3Agent: actor input mismatch");
    pad_ = nets_.critic1.input_dim() - obs_dim_ - action_dim();
    if (pad_ < 0) throw std::invalid_argument("Td3Agent: critic input too narrow");
  }

  static Td3Agent make(int obs_dim, ActionBox box, Td3Config cfg, Rng& rng) {
    auto heads = build_td3_family({obs_dim}, {box}, cfg, false, rng);
    return Td3Agent(std::move(heads.front()), std::move(box), std::move(cfg), obs_dim);
  }

  int obs_dim() const { return obs_dim_; }
  int action_dim() const { return static_cast<int>(box_.low.size()); }
  const ActionBox& box() const { return box_; }
  const Td3Config& config() const { return cfg_; }
  const Td3Heads& heads() const { return nets_; }
  Td3Heads& heads() { return nets_; }
  long update_count() const { return updates_; }

  Vector act(const Vector& obs) const {
    check_obs(obs);
    return nets_.actor.forward(obs);
  }

  /// Behaviour action: greedy output plus Gaussian noise scaled by the half
  /// range, clipped to the box. noise_std = 0 returns act(obs) exactly.
  Vector select_action(const Vector& obs, double noise_std, Rng& rng) const {
    Vector a = act(obs);
    if (noise_std == 0.0) return a;
    const Vector half = box_.half_range();
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] += rng.normal(0.0, noise_std * half[i]);
    return box_.clip(a);
  }

  /// Critic regression targets for a batch; consumes smoothing noise from rng.
  Vector targets(const std::vector<Transition>& batch, Rng& rng) const {
    const Matrix sn = stack_columns(batch, [](const Transition& t) -> const Vector& { return t.s_next; });
    if (sn.rows() != obs_dim_) throw std::invalid_argument("Td3Agent: observation dimension mismatch");
    Matrix an = nets_.actor.forward_target(sn);
    const Vector half = box_.half_range();
    for (Eigen::Index j = 0; j < an.cols(); ++j)
      for (Eigen::Index i = 0; i < an.rows(); ++i) {
        double eps = cfg_.smoothing_std == 0.0 ? 0.0 : rng.normal(0.0, cfg_.smoothing_std * half[i]);
        eps = std::clamp(eps, -cfg_.smoothing_clip * half[i], cfg_.smoothing_clip * half[i]);
        an(i, j) = std::clamp(an(i, j) + eps, box_.low[i], box_.high[i]);
      }
    const Matrix qin = critic_input(sn, an);
    const Matrix q1 = nets_.critic1.forward_target(qin);
    const Matrix q2 = nets_.critic2.forward_target(qin);
    Vector y(static_cast<Eigen::Index>(batch.size()));
    for (std::size_t j = 0; j < batch.size(); ++j) {
      const auto& t = batch[j];
      const auto jj = static_cast<Eigen::Index>(j);
      const double boot = t.done ? 0.0 : bootstrap_discount(cfg_.gamma, t.horizon, cfg_.discount) * std::min(q1(0, jj), q2(0, jj));
      y[jj] = t.r + boot;
    }
    return y;
  }

  Td3Losses train_step(const std::vector<Transition>& batch, Rng& rng) {
    if (batch.empty()) throw std::invalid_argument("td3 train_step: empty batch");
    const auto n = static_cast<double>(batch.size());
    const Vector y = targets(batch, rng);
    const Matrix s = stack_columns(batch, [](const Transition& t) -> const Vector& { return t.s; });
    const Matrix a = stack_columns(batch, [](const Transition& t) -> const Vector& { return t.a; });
    if (a.rows() != action_dim()) throw std::invalid_argument("Td3Agent: action dimension mismatch");
    const Matrix qin = critic_input(s, a);

    Td3Losses out;
    for (NetHandle* critic : {&nets_.critic1, &nets_.critic2}) {
      approx::Tape tape;
      const Matrix q = critic->forward(qin, &tape);
      const Matrix err = q - y.transpose();
      out.critic += err.squaredNorm() / n;
      critic->apply(tape, (2.0 / n) * err);
    }
    out.critic /= 2;

    ++updates_;
    if (updates_ % cfg_.policy_delay == 0) {
      approx::Tape actor_tape;
      const Matrix pa = nets_.actor.forward(s, &actor_tape);
      approx::Tape q_tape;
      const Matrix q = nets_.critic1.forward(critic_input(s, pa), &q_tape);
      out.actor = -q.mean();
      const Matrix dq = nets_.critic1.input_gradient(q_tape, Matrix::Constant(1, q.cols(), -1.0 / n));
      if (cfg_.preact_penalty > 0) {
        const Matrix dz = (2.0 * cfg_.preact_penalty / n) * actor_tape.out_pre;
        out.actor = *out.actor + cfg_.preact_penalty * actor_tape.out_pre.squaredNorm() / n;
        nets_.actor.apply(actor_tape, dq.middleRows(obs_dim_ + pad_, action_dim()), nullptr, &dz);
      } else {
        nets_.actor.apply(actor_tape, dq.middleRows(obs_dim_ + pad_, action_dim()));
      }
      nets_.actor.polyak(cfg_.tau);
      nets_.critic1.polyak(cfg_.tau);
      nets_.critic2.polyak(cfg_.tau);
    }
    return out;
  }

  double q1(const Vector& obs, const Vector& action) const {
    return nets_.critic1.forward(Matrix(critic_input(Matrix(obs), Matrix(action))))(0, 0);
  }

 private:
  void check_obs(const Vector& obs) const {
    if (obs.size() != obs_dim_) throw std::invalid_argument("Td3Agent: observation dimension mismatch");
  }

  Matrix critic_input(const Matrix& s, const Matrix& a) const {
    Matrix m = Matrix::Zero(obs_dim_ + pad_ + action_dim(), s.cols());
    m.topRows(obs_dim_) = s;
    m.bottomRows(action_dim()) = a;
    return m;
  }

  Td3Heads nets_;
  ActionBox box_;
  Td3Config cfg_;
  int obs_dim_ = 0;
  int pad_ = 0;
  long updates_ = 0;
};

}  // namespace hierlab::agents
