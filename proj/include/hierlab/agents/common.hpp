#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace hierlab::agents {

/// How a k-step bootstrap is discounted: gamma^k (`horizon`) or a single
/// gamma regardless of k (`literal`).
enum class DiscountExponent { horizon, literal };

inline DiscountExponent parse_discount_exponent(std::string_view s) {
  if (s == "horizon") return DiscountExponent::horizon;
  if (s == "literal") return DiscountExponent::literal;
  throw std::invalid_argument("unknown discount exponent '" + std::string(s) + "'");
}

inline std::string_view discount_exponent_name(DiscountExponent e) {
  return e == DiscountExponent::horizon ? "horizon" : "literal";
}

inline double bootstrap_discount(double gamma, int horizon, DiscountExponent mode) {
  if (horizon < 1) throw std::invalid_argument("bootstrap horizon must be >= 1");
  return mode == DiscountExponent::horizon ? std::pow(gamma, horizon) : gamma;
}

/// Packs equally sized vectors as the columns of a matrix.
template <typename Range, typename Get>
Eigen::MatrixXd stack_columns(const Range& items, Get get) {
  const auto n = static_cast<Eigen::Index>(std::size(items));
  if (n == 0) throw std::invalid_argument("stack_columns: empty batch");
  const Eigen::Index d = get(*std::begin(items)).size();
  Eigen::MatrixXd m(d, n);
  Eigen::Index j = 0;
  for (const auto& it : items) {
    const auto& v = get(it);
    if (v.size() != d) throw std::invalid_argument("stack_columns: ragged batch");
    m.col(j++) = v;
  }
  return m;
}

inline Eigen::MatrixXd vstack(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd m(top.rows() + bottom.rows(), top.cols());
  m << top, bottom;
  return m;
}

}  // namespace hierlab::agents
