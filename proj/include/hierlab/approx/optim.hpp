#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace hierlab::approx {

struct AdamState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  long step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(Eigen::Index size, double lr = 1e-3)
      : first_moment(Eigen::VectorXd::Zero(size)),
        second_moment(Eigen::VectorXd::Zero(size)),
        learning_rate(lr) {}
};

/// One bias-corrected Adam step, in place. `params` and `grads` may be
/// segments of larger vectors.
template <typename Params, typename Grads>
void adam_step(AdamState& adam, Eigen::MatrixBase<Params>& params, const Eigen::MatrixBase<Grads>& grads) {
  if (params.size() != grads.size() || params.size() != adam.first_moment.size())
    throw std::invalid_argument("adam_step: length mismatch");
  ++adam.step_count;
  adam.first_moment = adam.beta1 * adam.first_moment + (1.0 - adam.beta1) * grads;
  adam.second_moment = adam.beta2 * adam.second_moment + (1.0 - adam.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.step_count));
  const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.step_count));
  params -= (adam.learning_rate * (adam.first_moment.array() / c1) /
             ((adam.second_moment.array() / c2).sqrt() + adam.epsilon))
                .matrix();
}

template <typename Params, typename Grads>
void adam_step(AdamState& adam, Eigen::MatrixBase<Params>&& params, const Eigen::MatrixBase<Grads>& grads) {
  adam_step(adam, params, grads);
}

/// target <- tau * online + (1 - tau) * target.
template <typename Target, typename Online>
void polyak_update(Eigen::MatrixBase<Target>& target, const Eigen::MatrixBase<Online>& online, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("polyak_update: tau must lie in [0, 1]");
  if (target.size() != online.size()) throw std::invalid_argument("polyak_update: length mismatch");
  if (tau == 1.0) {
    target = online;
    return;
  }
  // Written as a correction so that target == online is an exact fixed point.
  target += tau * (online - target);
}

template <typename Target, typename Online>
void polyak_update(Eigen::MatrixBase<Target>&& target, const Eigen::MatrixBase<Online>& online, double tau) {
  polyak_update(target, online, tau);
}

}  // namespace hierlab::approx
