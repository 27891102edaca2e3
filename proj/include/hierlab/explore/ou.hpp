#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "hierlab/rng.hpp"

namespace hierlab::explore {

using Vector = Eigen::VectorXd;

/// `reversion`: x' = (1 - damping) x + eps. `retention`: x' = damping x + eps.
enum class OuForm { reversion, retention };

inline OuForm parse_ou_form(std::string_view s) {
  if (s == "reversion") return OuForm::reversion;
  if (s == "retention") return OuForm::retention;
  throw std::invalid_argument("unknown OU form '" + std::string(s) + "'");
}

inline std::string_view ou_form_name(OuForm f) { return f == OuForm::reversion ? "reversion" : "retention"; }

/// Discrete-time Ornstein-Uhlenbeck (AR(1)) process in goal space.
struct OuState {
  Vector value = Vector::Zero(2);
  double sigma = 1.0;
  double damping = 0.8;
  OuForm form = OuForm::reversion;

  double persistence() const { return form == OuForm::reversion ? 1.0 - damping : damping; }

  /// Closed-form stationary standard deviation per coordinate.
  double stationary_std() const {
    const double p = persistence();
    return sigma / std::sqrt(1.0 - p * p);
  }
};

inline OuState ou_next(OuState s, Rng& rng) {
  if (!(s.damping >= 0 && s.damping <= 1)) throw std::invalid_argument("OU damping must lie in [0, 1]");
  if (s.sigma < 0) throw std::invalid_argument("OU sigma must be non-negative");
  const double p = s.persistence();
  for (Eigen::Index i = 0; i < s.value.size(); ++i)
    s.value[i] = p * s.value[i] + (s.sigma == 0.0 ? 0.0 : rng.normal(0.0, s.sigma));
  return s;
}

inline Vector clip_to_box(const Vector& v, double bound) { return v.cwiseMax(-bound).cwiseMin(bound); }

}  // namespace hierlab::explore
