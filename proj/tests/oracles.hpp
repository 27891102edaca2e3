#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "hierlab/approx/network.hpp"
#include "hierlab/rng.hpp"

namespace oracle {

using Vec = Eigen::VectorXd;

// Scalar-loop forward pass over the documented parameter layout.
inline Vec mlp_forward(const Vec& p, const std::vector<int>& sizes, int heads, int head, const Vec& x,
                       bool squash, const Vec& lo, const Vec& hi) {
  std::vector<double> a(x.data(), x.data() + x.size());
  std::size_t off = 0;
  const std::size_t hidden = sizes.size() - 2;
  auto dense = [&](std::size_t offset, int in, int out, bool act) {
    std::vector<double> z(static_cast<std::size_t>(out));
    for (int o = 0; o < out; ++o) {
      double s = p[static_cast<Eigen::Index>(offset + static_cast<std::size_t>(in * out + o))];
      for (int i = 0; i < in; ++i) s += p[static_cast<Eigen::Index>(offset + static_cast<std::size_t>(i * out + o))] * a[static_cast<std::size_t>(i)];
      z[static_cast<std::size_t>(o)] = act ? std::tanh(s) : s;
    }
    a = z;
  };
  for (std::size_t l = 0; l < hidden; ++l) {
    dense(off, sizes[l], sizes[l + 1], true);
    off += static_cast<std::size_t>((sizes[l] + 1) * sizes[l + 1]);
  }
  const int in = sizes[hidden], out = sizes.back();
  (void)heads;
  dense(off + static_cast<std::size_t>(head * (in + 1) * out), in, out, false);
  Vec y(out);
  for (int o = 0; o < out; ++o) {
    const double z = a[static_cast<std::size_t>(o)];
    y[o] = squash ? lo[o] + (hi[o] - lo[o]) * 0.5 * (std::tanh(z) + 1.0) : z;
  }
  return y;
}

// Depth <= 3 hidden layers, width <= 16.
inline hierlab::approx::Network random_mlp(hierlab::Rng& rng) {
  std::vector<int> sizes;
  sizes.push_back(1 + static_cast<int>(rng.index(16)));
  const int depth = static_cast<int>(rng.index(4));
  for (int d = 0; d < depth; ++d) sizes.push_back(1 + static_cast<int>(rng.index(16)));
  const int out = 1 + static_cast<int>(rng.index(4));
  sizes.push_back(out);
  const int heads = 1 + static_cast<int>(rng.index(3));
  auto squash = rng.uniform() < 0.5 ? hierlab::approx::OutputSquash::identity()
                                    : hierlab::approx::OutputSquash::tanh_box(Vec::Constant(out, -2.0),
                                                                              Vec::Constant(out, 1.0), heads);
  return hierlab::approx::Network(sizes, heads, squash, rng);
}

// Central differences of upstream . f(x; params) w.r.t. params.
inline Vec fd_param_gradient(hierlab::approx::Network net, const Vec& x, const Vec& up, int head, double h) {
  Vec g(net.param_count());
  for (Eigen::Index i = 0; i < net.param_count(); ++i) {
    const double keep = net.params()[i];
    net.params()[i] = keep + h;
    const double fp = up.dot(net.forward(x, head));
    net.params()[i] = keep - h;
    const double fm = up.dot(net.forward(x, head));
    net.params()[i] = keep;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

// Elementwise |a-b| / max(|a|, |b|), with a floor of 1e-6 on the denominator
// so that entries that are zero up to round-off do not dominate.
inline double max_relative_error(const Vec& a, const Vec& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), 1e-6});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace oracle

#include "hierlab/replay/records.hpp"

namespace oracle {

// Upper-tail 1% critical values of the chi-square distribution (scipy.stats.chi2.ppf(0.99, df)).
inline double chi2_crit_99(int df) {
  switch (df) {
    case 1: return 6.6348966010212145;
    case 2: return 9.21034037197618;
    case 3: return 11.344866730144373;
    case 4: return 13.276704135987622;
    case 9: return 21.665994333461924;
    case 19: return 36.19086912927004;
    case 29: return 49.58788447289881;
  }
  throw std::invalid_argument("chi2_crit_99: df not tabulated");
}

inline double chi2_uniform(const std::vector<long>& counts) {
  double total = 0;
  for (long c : counts) total += static_cast<double>(c);
  const double expected = total / static_cast<double>(counts.size());
  double stat = 0;
  for (long c : counts) stat += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  return stat;
}

struct WindowSum {
  double sum;
  std::size_t end;  // one past the last step included
  bool terminal;
};

// Sum of rewards from t, enumerating each candidate cut point: the window
// ends at the first terminal step, at t + c, or at the end of the episode,
// whichever comes first.
inline WindowSum brute_window(const hierlab::replay::Trajectory& traj, std::size_t t, int c) {
  std::size_t first_terminal = traj.size();
  for (std::size_t j = t; j < traj.size(); ++j)
    if (traj[j].terminal) {
      first_terminal = j;
      break;
    }
  const std::size_t end = std::min({t + static_cast<std::size_t>(c), first_terminal + 1, traj.size()});
  double s = 0;
  for (std::size_t j = t; j < end; ++j) s += traj[j].reward;
  return {s, end, first_terminal < end};
}

inline hierlab::replay::Trajectory random_trajectory(hierlab::Rng& rng, std::size_t max_len = 40) {
  hierlab::replay::Trajectory traj;
  const std::size_t len = 1 + rng.index(max_len);
  for (std::size_t i = 0; i < len; ++i) {
    hierlab::replay::TrajectoryStep st;
    st.obs = Vec::Constant(3, static_cast<double>(i));
    st.next_obs = Vec::Constant(3, static_cast<double>(i + 1));
    st.action = Vec::Constant(2, static_cast<double>(i) * 0.01);
    st.reward = rng.normal(0, 3);
    st.goal = Vec::Constant(2, static_cast<double>(i / 5));
    st.option = static_cast<int>(i / 5);
    traj.push_back(st);
  }
  // a terminal on the last step for some episodes; occasionally one earlier
  // too, which windows must not cross either
  if (rng.uniform() < 0.5) traj.back().terminal = true;
  if (rng.uniform() < 0.2) traj[rng.index(len)].terminal = true;
  return traj;
}

}  // namespace oracle
