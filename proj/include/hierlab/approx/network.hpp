#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hierlab/rng.hpp"

namespace hierlab::approx {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Half-open index range into a flat parameter vector.
struct ParamRange {
  Eigen::Index offset = 0;
  Eigen::Index size = 0;
};

/// Output non-linearity applied after the final linear layer.
///
/// `tanh_box` maps tanh(z) affinely onto [low, high] per output dimension. Each
/// head may carry its own box so that a combined network can host policies
/// with different action ranges.
struct OutputSquash {
  enum class Kind { identity, tanh_box };

  Kind kind = Kind::identity;
  std::vector<Vector> low;   // one per head (tanh_box only)
  std::vector<Vector> high;

  static OutputSquash identity() { return {}; }

  static OutputSquash tanh_box(Vector lo, Vector hi, int heads = 1) {
    OutputSquash s;
    s.kind = Kind::tanh_box;
    s.low.assign(static_cast<std::size_t>(heads), std::move(lo));
    s.high.assign(static_cast<std::size_t>(heads), std::move(hi));
    return s;
  }

  static OutputSquash tanh_box_per_head(std::vector<Vector> lo, std::vector<Vector> hi) {
    OutputSquash s;
    s.kind = Kind::tanh_box;
    s.low = std::move(lo);
    s.high = std::move(hi);
    return s;
  }
};

/// Activations recorded by a batched forward pass, consumed by backward().
struct Tape {
  int head = 0;
  std::vector<Matrix> acts;  // acts[0] = input, acts[i] = tanh output of hidden layer i
  Matrix out_tanh;           // tanh(z) of the head when squashed
  Matrix out_pre;            // z itself
};

/// Elementwise tanh through the vectorised exp; libm's scalar tanh dominates
/// training time otherwise. Absolute error stays within a few ulp of 1.
inline Matrix tanh_of(const Matrix& z) {
  const auto x = z.array();
  const Eigen::ArrayXXd t = (-2.0 * x.abs()).exp();
  return (x.sign() * (1.0 - t) / (1.0 + t)).matrix();
}

/// Fully connected tanh network with an optional multi-head output layer.
///
/// Every hidden layer belongs to the shared trunk; the last linear layer is
/// replicated once per head. With layer_sizes = {in, h1, ..., hk, out} the
/// trunk is in->h1->...->hk and each head is hk->out. Weights of a layer are
/// stored column-major (out x in) followed by the bias.
class Network {
 public:
  Network() = default;

  Network(std::vector<int> layer_sizes, int head_count, OutputSquash squash)
      : sizes_(std::move(layer_sizes)), heads_(head_count), squash_(std::move(squash)) {
    if (sizes_.size() < 2) throw std::invalid_argument("network needs at least two layer sizes");
    for (int s : sizes_)
      if (s <= 0) throw std::invalid_argument("layer sizes must be positive");
    if (heads_ < 1) throw std::invalid_argument("head_count must be >= 1");
    if (squash_.kind == OutputSquash::Kind::tanh_box) {
      if (squash_.low.size() != static_cast<std::size_t>(heads_) || squash_.high.size() != squash_.low.size())
        throw std::invalid_argument("tanh_box needs one box per head");
      for (int h = 0; h < heads_; ++h) {
        if (squash_.low[h].size() != output_dim() || squash_.high[h].size() != output_dim())
          throw std::invalid_argument("tanh_box dimension mismatch");
        if ((squash_.high[h].array() <= squash_.low[h].array()).any())
          throw std::invalid_argument("tanh_box requires low < high");
      }
    }
    layout();
    params_ = Vector::Zero(count_);
  }

  Network(std::vector<int> layer_sizes, int head_count, OutputSquash squash, Rng& rng)
      : Network(std::move(layer_sizes), head_count, std::move(squash)) {
    initialize(rng);
  }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
  void initialize(Rng& rng) {
    for (const auto& layer : layers_) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
      for (Eigen::Index i = 0; i < layer.in * layer.out + layer.out; ++i)
        params_[layer.offset + i] = rng.uniform(-bound, bound);
    }
  }

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int head_count() const { return heads_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  Eigen::Index param_count() const { return count_; }
  const OutputSquash& squash() const { return squash_; }

  const Vector& params() const { return params_; }
  Vector& params() { return params_; }

  ParamRange trunk_range() const { return {0, trunk_count_}; }
  ParamRange head_range(int head) const {
    check_head(head);
    return {trunk_count_ + head * head_count_, head_count_};
  }

  Vector forward(const Vector& input, int head = 0) const {
    if (input.size() != input_dim()) throw std::invalid_argument("forward: input dimension mismatch");
    return forward_batch(input, head).col(0);
  }

  /// Forward pass over a batch stored column-wise (input_dim x batch).
  Matrix forward_batch(const Matrix& inputs, int head = 0, Tape* tape = nullptr) const {
    check_head(head);
    if (inputs.rows() != input_dim()) throw std::invalid_argument("forward: input dimension mismatch");
    const std::size_t hidden = sizes_.size() - 2;
    Matrix a = inputs;
    if (tape) {
      tape->head = head;
      tape->acts.clear();
      tape->acts.push_back(inputs);
    }
    for (std::size_t l = 0; l < hidden; ++l) {
      Matrix z = (weights(layers_[l]) * a).colwise() + bias(layers_[l]);
      a = tanh_of(z);
      if (tape) tape->acts.push_back(a);
    }
    const Layer& out = head_layer(head);
    Matrix z = (weights(out) * a).colwise() + bias(out);
    if (squash_.kind == OutputSquash::Kind::identity) return z;
    Matrix t = tanh_of(z);
    if (tape) {
      tape->out_tanh = t;
      tape->out_pre = z;
    }
    const Vector mid = 0.5 * (squash_.high[head] + squash_.low[head]);
    const Vector half = 0.5 * (squash_.high[head] - squash_.low[head]);
    return (half.asDiagonal() * t).colwise() + mid;
  }

  /// Reverse pass: accumulates d(sum(upstream .* output))/d(params) into
  /// `param_grad`; optionally writes the gradient w.r.t. the inputs.
  /// `pre_squash`, when given, is an extra upstream on the head's
  /// pre-activation z (squashed networks only).
  void backward(const Tape& tape, const Matrix& upstream, Vector& param_grad, Matrix* input_grad = nullptr,
                const Matrix* pre_squash = nullptr) const {
    if (upstream.rows() != output_dim() || upstream.cols() != tape.acts.front().cols())
      throw std::invalid_argument("backward: upstream gradient dimension mismatch");
    if (param_grad.size() != count_) param_grad = Vector::Zero(count_);
    const int head = tape.head;
    Matrix dz = upstream;
    if (squash_.kind == OutputSquash::Kind::tanh_box) {
      const Vector half = 0.5 * (squash_.high[head] - squash_.low[head]);
      dz = (half.asDiagonal() * upstream).cwiseProduct((1.0 - tape.out_tanh.array().square()).matrix());
      if (pre_squash) {
        if (pre_squash->rows() != dz.rows() || pre_squash->cols() != dz.cols())
          throw std::invalid_argument("backward: pre-squash gradient dimension mismatch");
        dz += *pre_squash;
      }
    } else if (pre_squash) {
      throw std::invalid_argument("backward: pre-squash gradient on an unsquashed network");
    }
    const std::size_t hidden = sizes_.size() - 2;
    const Layer* layer = &head_layer(head);
    for (std::size_t l = hidden + 1; l-- > 0;) {
      const Matrix& a_in = tape.acts[l];
      accumulate(*layer, dz, a_in, param_grad);
      if (l == 0) {
        if (input_grad) *input_grad = weights(*layer).transpose() * dz;
        break;
      }
      Matrix da = weights(*layer).transpose() * dz;
      dz = da.cwiseProduct((1.0 - a_in.array().square()).matrix());
      layer = &layers_[l - 1];
    }
  }

  /// Parameter gradient of upstream . forward(input, head).
  Vector gradient(const Vector& input, const Vector& upstream, int head = 0) const {
    if (input.size() != input_dim()) throw std::invalid_argument("gradient: input dimension mismatch");
    if (upstream.size() != output_dim()) throw std::invalid_argument("gradient: upstream dimension mismatch");
    Tape tape;
    forward_batch(input, head, &tape);
    Vector grad = Vector::Zero(count_);
    backward(tape, upstream, grad);
    return grad;
  }

 private:
  struct Layer {
    Eigen::Index offset;
    int in;
    int out;
  };

  void layout() {
    layers_.clear();
    Eigen::Index off = 0;
    const std::size_t hidden = sizes_.size() - 2;
    for (std::size_t l = 0; l < hidden; ++l) {
      layers_.push_back({off, sizes_[l], sizes_[l + 1]});
      off += static_cast<Eigen::Index>(sizes_[l] + 1) * sizes_[l + 1];
    }
    trunk_count_ = off;
    const int in = sizes_[sizes_.size() - 2];
    const int out = sizes_.back();
    head_count_ = static_cast<Eigen::Index>(in + 1) * out;
    for (int h = 0; h < heads_; ++h) {
      layers_.push_back({off, in, out});
      off += head_count_;
    }
    count_ = off;
  }

  void check_head(int head) const {
    if (head < 0 || head >= heads_) throw std::out_of_range("head index out of range");
  }

  const Layer& head_layer(int head) const { return layers_[sizes_.size() - 2 + static_cast<std::size_t>(head)]; }

  Eigen::Map<const Matrix> weights(const Layer& l) const {
    return {params_.data() + l.offset, l.out, l.in};
  }
  Eigen::Map<const Vector> bias(const Layer& l) const {
    return {params_.data() + l.offset + static_cast<Eigen::Index>(l.in) * l.out, l.out};
  }

  static void accumulate(const Layer& l, const Matrix& dz, const Matrix& a_in, Vector& grad) {
    Eigen::Map<Matrix> dw(grad.data() + l.offset, l.out, l.in);
    Eigen::Map<Vector> db(grad.data() + l.offset + static_cast<Eigen::Index>(l.in) * l.out, l.out);
    dw.noalias() += dz * a_in.transpose();
    db += dz.rowwise().sum();
  }

  std::vector<int> sizes_;
  int heads_ = 1;
  OutputSquash squash_;
  std::vector<Layer> layers_;
  Eigen::Index trunk_count_ = 0;
  Eigen::Index head_count_ = 0;
  Eigen::Index count_ = 0;
  Vector params_;
};

}  // namespace hierlab::approx
