#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hierlab/rng.hpp"

namespace hierlab::envs {

using Vec2 = Eigen::Vector2d;
using Vector = Eigen::VectorXd;

struct Rect {
  double xmin, ymin, xmax, ymax;
};

enum class TaskId { MazeDesk, PushDesk, BlockDesk, BlockMazeDesk };

inline std::string_view task_name(TaskId id) {
  switch (id) {
    case TaskId::MazeDesk: return "PointMazeDesk";
    case TaskId::PushDesk: return "PointPushDesk";
    case TaskId::BlockDesk: return "PointBlockDesk";
    case TaskId::BlockMazeDesk: return "PointBlockMazeDesk";
  }
  return "?";
}

inline TaskId parse_task(std::string_view s) {
  for (TaskId id : {TaskId::MazeDesk, TaskId::PushDesk, TaskId::BlockDesk, TaskId::BlockMazeDesk}) {
    const auto full = task_name(id);
    if (s == full || s == full.substr(5)) return id;  // "PointMazeDesk" or "MazeDesk"
  }
  throw std::invalid_argument("unknown task '" + std::string(s) + "'");
}

/// Static description of a task. Lengths are arena units; velocities are
/// arena units per step.
struct EnvSpec {
  TaskId task_id = TaskId::MazeDesk;
  double arena_halfwidth = 4.0;
  std::vector<Rect> wall_segments;
  Vec2 target_xy{0, 0};
  double success_radius = 0.5;
  int episode_limit = 200;
  bool block_present = false;
  double dt = 0.1;
  double friction = 0.9;
  double max_speed = 2.0;

  Vec2 agent_start{0, 0};
  Vec2 block_start{0, 0};
  double agent_halfsize = 0.25;
  double block_halfsize = 0.3;
  double start_noise = 0.1;
  bool sparse_reward = false;

  bool goal_entity_is_block() const {
    return task_id == TaskId::BlockDesk || task_id == TaskId::BlockMazeDesk;
  }
};

struct EnvState {
  Vec2 agent_xy{0, 0};
  Vec2 agent_vel{0, 0};
  Vec2 block_xy{0, 0};
  Vec2 block_vel{0, 0};
  int t = 0;
};

struct StepResult {
  Vector observation;
  double reward = 0.0;
  bool done = false;
  bool success = false;
};

namespace detail {

inline bool overlaps(const Rect& r, const Vec2& c, double half, double tol = 1e-9) {
  return c.x() + half > r.xmin + tol && c.x() - half < r.xmax - tol && c.y() + half > r.ymin + tol &&
         c.y() - half < r.ymax - tol;
}

inline Rect box(const Vec2& c, double half) { return {c.x() - half, c.y() - half, c.x() + half, c.y() + half}; }

inline double lo(const Rect& r, int axis) { return axis == 0 ? r.xmin : r.ymin; }
inline double hi(const Rect& r, int axis) { return axis == 0 ? r.xmax : r.ymax; }

// Furthest coordinate along `axis` that a square of half-size `half` at `c`
// can reach when moved by `delta`, stopping at the first wall face or the
// arena boundary it meets.
inline double sweep_limit(const EnvSpec& spec, const Vec2& c, double half, int axis, double delta) {
  const int other = 1 - axis;
  const double tol = 1e-9;
  const double from = c[axis];
  double to = from + delta;
  const double bound = spec.arena_halfwidth - half;
  to = std::clamp(to, -bound, bound);
  for (const Rect& w : spec.wall_segments) {
    if (!(c[other] + half > lo(w, other) + tol && c[other] - half < hi(w, other) - tol)) continue;
    if (delta > 0 && lo(w, axis) >= from + half - tol) to = std::min(to, lo(w, axis) - half);
    if (delta < 0 && hi(w, axis) <= from - half + tol) to = std::max(to, hi(w, axis) + half);
  }
  return delta > 0 ? std::max(to, from) : std::min(to, from);
}

inline void move_axis(const EnvSpec& spec, EnvState& s, int axis) {
  const double delta = s.agent_vel[axis];
  s.block_vel[axis] = 0.0;
  if (delta == 0.0) return;
  const int other = 1 - axis;
  const double ra = spec.agent_halfsize;
  double to = sweep_limit(spec, s.agent_xy, ra, axis, delta);
  bool blocked = std::abs(to - s.agent_xy[axis]) < std::abs(delta) - 1e-12;

  if (spec.block_present) {
    const double rb = spec.block_halfsize;
    const double tol = 1e-9;
    const bool aligned = std::abs(s.agent_xy[other] - s.block_xy[other]) < ra + rb - tol;
    const double gap =
        delta > 0 ? (s.block_xy[axis] - rb) - (s.agent_xy[axis] + ra) : (s.agent_xy[axis] - ra) - (s.block_xy[axis] + rb);
    if (aligned && gap >= -tol) {
      const double travel = std::abs(to - s.agent_xy[axis]);
      if (travel > gap) {
        // Contact: the block absorbs the remaining displacement, limited by walls.
        const double push = (travel - std::max(gap, 0.0)) * (delta > 0 ? 1.0 : -1.0);
        const double block_to = sweep_limit(spec, s.block_xy, rb, axis, push);
        const double moved = block_to - s.block_xy[axis];
        s.block_vel[axis] = moved;
        s.block_xy[axis] = block_to;
        if (std::abs(moved - push) > 1e-12) blocked = true;
        const double contact = delta > 0 ? block_to - rb - ra : block_to + rb + ra;
        to = delta > 0 ? std::min(to, contact) : std::max(to, contact);
      }
    }
  }
  s.agent_xy[axis] = to;
  if (blocked) s.agent_vel[axis] = 0.0;
}

}  // namespace detail

inline int observation_dim(const EnvSpec& spec) { return spec.block_present ? 8 : 6; }

inline Vec2 goal_entity_xy(const EnvSpec& spec, const EnvState& s) {
  return spec.goal_entity_is_block() ? s.block_xy : s.agent_xy;
}

/// (agent_xy, agent_vel, [block_xy - agent_xy], target_xy - goal_entity_xy).
inline Vector observe(const EnvSpec& spec, const EnvState& s) {
  Vector obs(observation_dim(spec));
  obs.segment<2>(0) = s.agent_xy;
  obs.segment<2>(2) = s.agent_vel;
  int k = 4;
  if (spec.block_present) {
    obs.segment<2>(k) = s.block_xy - s.agent_xy;
    k += 2;
  }
  obs.segment<2>(k) = spec.target_xy - goal_entity_xy(spec, s);
  return obs;
}

inline double target_distance(const EnvSpec& spec, const EnvState& s) {
  return (goal_entity_xy(spec, s) - spec.target_xy).norm();
}

inline bool success(const EnvSpec& spec, const EnvState& s) { return target_distance(spec, s) < spec.success_radius; }

inline double reward(const EnvSpec& spec, const EnvState& s) {
  if (spec.sparse_reward) return success(spec, s) ? 0.0 : -1.0;
  return -target_distance(spec, s) / spec.arena_halfwidth;
}

inline bool in_collision(const EnvSpec& spec, const Vec2& c, double half) {
  const double tol = 1e-9;
  if (std::abs(c.x()) > spec.arena_halfwidth - half + tol || std::abs(c.y()) > spec.arena_halfwidth - half + tol)
    return true;
  for (const Rect& w : spec.wall_segments)
    if (detail::overlaps(w, c, half)) return true;
  return false;
}

/// True when no body overlaps a wall, the arena edge, or the other body.
inline bool state_valid(const EnvSpec& spec, const EnvState& s) {
  if (in_collision(spec, s.agent_xy, spec.agent_halfsize)) return false;
  if (!spec.block_present) return true;
  if (in_collision(spec, s.block_xy, spec.block_halfsize)) return false;
  return !detail::overlaps(detail::box(s.block_xy, spec.block_halfsize), s.agent_xy, spec.agent_halfsize);
}

inline void validate(const EnvSpec& spec) {
  if (!(spec.success_radius > 0)) throw std::invalid_argument("success_radius must be positive");
  if (spec.episode_limit < 1) throw std::invalid_argument("episode_limit must be >= 1");
  if (!(spec.friction > 0 && spec.friction < 1)) throw std::invalid_argument("friction must lie in (0, 1)");
  if (std::abs(spec.target_xy.x()) >= spec.arena_halfwidth || std::abs(spec.target_xy.y()) >= spec.arena_halfwidth)
    throw std::invalid_argument("target outside arena");
  for (const Rect& w : spec.wall_segments)
    if (detail::overlaps(w, spec.target_xy, 0.0)) throw std::invalid_argument("target inside a wall");
}

/// Desk-scale layouts on a 3x3 grid of cells spanning [-4, 4]^2.
inline EnvSpec make_spec(TaskId id) {
  constexpr double c = 4.0 / 3.0;  // cell boundary
  constexpr double m = 8.0 / 3.0;  // outer cell centre
  EnvSpec spec;
  spec.task_id = id;
  switch (id) {
    case TaskId::MazeDesk:
      // U-corridor: start in the lower arm, target at the end of the upper arm.
      spec.wall_segments = {{-4.0, -c, c, c}};
      spec.agent_start = {-m, -m};
      spec.target_xy = {-m, m};
      break;
    case TaskId::PushDesk:
      // The block sits in the only passage to the target; it has to be pushed
      // right, into the free cell beside it, before the way up is open.
      spec.wall_segments = {{-4.0, c, -c, 4.0}, {c, c, 4.0, 4.0}, {c, -4.0, 4.0, -c}};
      spec.block_present = true;
      spec.block_halfsize = 1.1;
      spec.block_start = {0.0, 0.0};
      spec.agent_start = {0.0, -m};
      spec.target_xy = {0.0, m};
      break;
    case TaskId::BlockDesk:
      spec.block_present = true;
      spec.block_start = {0.0, 0.0};
      spec.agent_start = {-2.0, -2.0};
      spec.target_xy = {2.0, 2.0};
      break;
    case TaskId::BlockMazeDesk:
      spec.wall_segments = {{-4.0, -c, c, c}};
      spec.block_present = true;
      spec.block_start = {0.0, -m};
      spec.agent_start = {-m, -m};
      spec.target_xy = {m, 0.0};
      break;
  }
  validate(spec);
  return spec;
}

inline EnvState reset(const EnvSpec& spec, Rng& rng) {
  EnvState s;
  const double r = spec.start_noise * std::sqrt(rng.uniform());
  const double theta = rng.uniform(0.0, 2.0 * M_PI);
  s.agent_xy = spec.agent_start + r * Vec2(std::cos(theta), std::sin(theta));
  s.block_xy = spec.block_start;
  return s;
}

struct Transitioned {
  EnvState state;
  StepResult result;
};

/// Advances one step. vel <- friction * vel + dt * action (norm-clipped to
/// max_speed), then the agent moves by vel one axis at a time. Walls stop it;
/// the block is displaced quasi-statically when the agent runs into it.
inline Transitioned step(const EnvSpec& spec, const EnvState& state, const Vector& action) {
  if (action.size() != 2) throw std::invalid_argument("step: action must be 2-dimensional");
  if (!action.allFinite() || (action.array().abs() > 1.0).any())
    throw std::invalid_argument("step: action outside [-1, 1]^2");
  if (state.t >= spec.episode_limit) throw std::logic_error("step: episode already finished");
  EnvState s = state;
  s.agent_vel = spec.friction * s.agent_vel + spec.dt * action;
  const double speed = s.agent_vel.norm();
  if (speed > spec.max_speed) s.agent_vel *= spec.max_speed / speed;
  detail::move_axis(spec, s, 0);
  detail::move_axis(spec, s, 1);
  s.t += 1;
  StepResult r;
  r.observation = observe(spec, s);
  r.reward = reward(spec, s);
  r.success = success(spec, s);
  r.done = r.success || s.t >= spec.episode_limit;
  return {s, r};
}

/// Wall geometry as "x1 y1 x2 y2" line segments (arena boundary first).
inline std::string dump_walls(const EnvSpec& spec) {
  std::ostringstream os;
  auto rect = [&](const Rect& r) {
    os << r.xmin << ' ' << r.ymin << ' ' << r.xmax << ' ' << r.ymin << '\n';
    os << r.xmax << ' ' << r.ymin << ' ' << r.xmax << ' ' << r.ymax << '\n';
    os << r.xmax << ' ' << r.ymax << ' ' << r.xmin << ' ' << r.ymax << '\n';
    os << r.xmin << ' ' << r.ymax << ' ' << r.xmin << ' ' << r.ymin << '\n';
  };
  const double h = spec.arena_halfwidth;
  rect({-h, -h, h, h});
  for (const Rect& w : spec.wall_segments) rect(w);
  return os.str();
}

}  // namespace hierlab::envs
