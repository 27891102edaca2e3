#pragma once

#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hierlab/approx/network.hpp"
#include "hierlab/approx/optim.hpp"

namespace hierlab::agents {

using approx::Matrix;
using approx::Vector;

/// An online network, its target copy and Adam state. Several agents may
/// share one group through different heads (the combined-network ablation);
/// the trunk then receives updates from every member.
struct NetGroup {
  approx::Network online;
  approx::Network target;
  approx::AdamState trunk_adam;
  std::vector<approx::AdamState> head_adam;

  NetGroup(approx::Network net, double learning_rate) : online(std::move(net)), target(online) {
    trunk_adam = approx::AdamState(online.trunk_range().size, learning_rate);
    for (int h = 0; h < online.head_count(); ++h)
      head_adam.emplace_back(online.head_range(h).size, learning_rate);
  }
};

/// One head of a NetGroup as seen by a single agent. Inputs narrower than
/// the group's input layer are zero-padded at the end.
class NetHandle {
 public:
  NetHandle() = default;
  /// `input_width` is this agent's own input size (<= the group's).
  NetHandle(std::shared_ptr<NetGroup> group, int head, int input_width = -1)
      : group_(std::move(group)), head_(head), width_(input_width) {
    if (!group_) throw std::invalid_argument("NetHandle: null group");
    if (head_ < 0 || head_ >= group_->online.head_count()) throw std::out_of_range("NetHandle: head out of range");
    if (width_ < 0) width_ = group_->online.input_dim();
    if (width_ > group_->online.input_dim()) throw std::invalid_argument("NetHandle: input wider than network");
  }

  static NetHandle solo(approx::Network net, double learning_rate) {
    return NetHandle(std::make_shared<NetGroup>(std::move(net), learning_rate), 0);
  }

  int head() const { return head_; }
  int input_dim() const { return width_; }
  int output_dim() const { return group_->online.output_dim(); }
  const approx::Network& online() const { return group_->online; }
  const approx::Network& target() const { return group_->target; }
  approx::Network& online() { return group_->online; }
  approx::Network& target() { return group_->target; }
  const std::shared_ptr<NetGroup>& group() const { return group_; }

  Matrix forward(const Matrix& x, approx::Tape* tape = nullptr) const {
    return group_->online.forward_batch(pad(x), head_, tape);
  }
  Matrix forward_target(const Matrix& x) const { return group_->target.forward_batch(pad(x), head_); }
  Vector forward(const Vector& x) const { return forward(Matrix(x)).col(0); }

  /// Backpropagates `upstream` and applies one Adam step to the trunk and this
  /// head. Returns the gradient w.r.t. the (unpadded) input when requested.
  void apply(const approx::Tape& tape, const Matrix& upstream, Matrix* input_grad = nullptr,
             const Matrix* pre_squash = nullptr) {
    auto& net = group_->online;
    Vector grad = Vector::Zero(net.param_count());
    Matrix padded_grad;
    net.backward(tape, upstream, grad, input_grad ? &padded_grad : nullptr, pre_squash);
    if (input_grad) *input_grad = padded_grad.topRows(width_);
    step(grad);
  }

  /// Gradient w.r.t. the input only; parameters are left untouched.
  Matrix input_gradient(const approx::Tape& tape, const Matrix& upstream) const {
    Vector scratch = Vector::Zero(group_->online.param_count());
    Matrix g;
    group_->online.backward(tape, upstream, scratch, &g);
    return g.topRows(width_);
  }

  void polyak(double tau) {
    for (auto r : {group_->online.trunk_range(), group_->online.head_range(head_)})
      approx::polyak_update(group_->target.params().segment(r.offset, r.size),
                            group_->online.params().segment(r.offset, r.size), tau);
  }

  void sync_target() { group_->target.params() = group_->online.params(); }

 private:
  Matrix pad(const Matrix& x) const {
    if (x.rows() != width_) throw std::invalid_argument("NetHandle: input dimension mismatch");
    const int d = group_->online.input_dim();
    if (d == width_) return x;
    Matrix p = Matrix::Zero(d, x.cols());
    p.topRows(x.rows()) = x;
    return p;
  }

  void step(const Vector& grad) {
    auto& net = group_->online;
    const auto trunk = net.trunk_range();
    const auto head = net.head_range(head_);
    if (trunk.size > 0)
      approx::adam_step(group_->trunk_adam, net.params().segment(trunk.offset, trunk.size),
                        grad.segment(trunk.offset, trunk.size));
    approx::adam_step(group_->head_adam[static_cast<std::size_t>(head_)], net.params().segment(head.offset, head.size),
                      grad.segment(head.offset, head.size));
  }

  std::shared_ptr<NetGroup> group_;
  int head_ = 0;
  int width_ = 0;
};

}  // namespace hierlab::agents
