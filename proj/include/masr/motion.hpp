#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "masr/robot.hpp"

namespace masr {

/// Joint deltas plus actuator delta; the componentwise difference between
/// two configurations.
struct Action {
  std::vector<double> dtheta;  // [rad]
  double dd = 0.0;             // [m]

  bool is_zero() const {
    if (dd != 0.0) return false;
    for (double v : dtheta)
      if (v != 0.0) return false;
    return true;
  }
};

/// Rotations smaller than this are noise, not intent: they get no actuator
/// detour and no rotate step.
inline constexpr double kRotationEpsilon = 1e-12;

inline Action action_between(const Configuration& to, const Configuration& from) {
  if (to.theta.size() != from.theta.size())
    throw std::invalid_argument("configurations differ in joint count");
  Action a;
  a.dtheta.resize(to.theta.size());
  for (std::size_t j = 0; j < to.theta.size(); ++j) a.dtheta[j] = to.theta[j] - from.theta[j];
  a.dd = to.d - from.d;
  return a;
}

inline Configuration apply_action(const Configuration& from, const Action& a) {
  if (a.dtheta.size() != from.theta.size())
    throw std::invalid_argument("action does not match configuration joint count");
  Configuration q = from;
  for (std::size_t j = 0; j < q.theta.size(); ++j) q.theta[j] += a.dtheta[j];
  q.d += a.dd;
  return q;
}

/// One primitive of the actuator's itinerary: a translation along the arm or
/// an in-place joint rotation (the actuator is parked on the joint's anchor).
struct MotionStep {
  enum class Kind { Move, Rotate };
  Kind kind = Kind::Move;
  double from_d = 0.0, to_d = 0.0;       // Move
  std::size_t joint = 0;                 // Rotate
  double from_angle = 0.0, to_angle = 0.0;

  static MotionStep move(double from, double to) {
    MotionStep s;
    s.kind = Kind::Move;
    s.from_d = from;
    s.to_d = to;
    return s;
  }
  static MotionStep rotate(std::size_t joint, double from, double to) {
    MotionStep s;
    s.kind = Kind::Rotate;
    s.joint = joint;
    s.from_angle = from;
    s.to_angle = to;
    return s;
  }
};

using MotionSteps = std::vector<MotionStep>;

namespace detail {

struct JointVisit {
  std::size_t joint;
  double anchor;
};

/// Joints the action actually rotates, with their anchor arc lengths.
inline std::vector<JointVisit> rotated_joints(const RobotModel& model, const Action& a) {
  std::vector<JointVisit> visits;
  for (std::size_t j = 0; j < a.dtheta.size(); ++j) {
    if (std::abs(a.dtheta[j]) >= kRotationEpsilon) visits.push_back({j, model.joint_anchor(j)});
  }
  return visits;
}

}  // namespace detail

/// Expands an action into the actuator's ordered itinerary. For dd >= 0 the
/// actuator first serves the joints at or behind its current position
/// (sweeping down, nearest first), then the ones ahead (sweeping up), then
/// settles at the final position; for dd < 0 the order mirrors. Rotations
/// happen only with the actuator parked exactly on the joint anchor.
inline MotionSteps expand_action(const RobotModel& model, const Configuration& q_from,
                                 const Action& a) {
  model.require_feasible(q_from);
  model.require_feasible(apply_action(q_from, a));

  const auto visits = detail::rotated_joints(model, a);
  const double d_start = q_from.d;
  const double d_final = d_start + a.dd;

  // Partition into the "behind" and "ahead" groups relative to the start.
  std::vector<detail::JointVisit> first_leg, second_leg;
  if (a.dd >= 0.0) {
    for (const auto& v : visits) (v.anchor <= d_start ? first_leg : second_leg).push_back(v);
    std::sort(first_leg.begin(), first_leg.end(),
              [](const auto& l, const auto& r) { return l.anchor > r.anchor; });
    std::sort(second_leg.begin(), second_leg.end(),
              [](const auto& l, const auto& r) { return l.anchor < r.anchor; });
  } else {
    for (const auto& v : visits) (v.anchor >= d_start ? first_leg : second_leg).push_back(v);
    std::sort(first_leg.begin(), first_leg.end(),
              [](const auto& l, const auto& r) { return l.anchor < r.anchor; });
    std::sort(second_leg.begin(), second_leg.end(),
              [](const auto& l, const auto& r) { return l.anchor > r.anchor; });
  }

  MotionSteps steps;
  double cur = d_start;
  auto serve = [&](const detail::JointVisit& v) {
    if (v.anchor != cur) {
      steps.push_back(MotionStep::move(cur, v.anchor));
      cur = v.anchor;
    }
    steps.push_back(MotionStep::rotate(v.joint, q_from.theta[v.joint],
                                       q_from.theta[v.joint] + a.dtheta[v.joint]));
  };
  for (const auto& v : first_leg) serve(v);
  for (const auto& v : second_leg) serve(v);
  if (cur != d_final) steps.push_back(MotionStep::move(cur, d_final));
  return steps;
}

/// Total arc length travelled by the actuator under the motion convention
/// (closed form; equals the move-step sum of expand_action).
inline double traverse_length(const RobotModel& model, const Configuration& q_from,
                              const Action& a) {
  model.require_feasible(q_from);
  model.require_feasible(apply_action(q_from, a));

  const double d_start = q_from.d;
  const double d_final = d_start + a.dd;
  double lo_anchor = std::numeric_limits<double>::infinity();
  double hi_anchor = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t j = 0; j < a.dtheta.size(); ++j) {
    if (std::abs(a.dtheta[j]) >= kRotationEpsilon) {
      lo_anchor = std::min(lo_anchor, model.joint_anchor(j));
      hi_anchor = std::max(hi_anchor, model.joint_anchor(j));
      any = true;
    }
  }
  if (a.dd >= 0.0) {
    const double lo = any ? std::min(lo_anchor, d_start) : d_start;
    const double hi = any ? std::max(hi_anchor, d_final) : d_final;
    return (d_start - lo) + (hi - lo) + (hi - d_final);
  }
  const double hi = any ? std::max(hi_anchor, d_start) : d_start;
  const double lo = any ? std::min(lo_anchor, d_final) : d_final;
  return (hi - d_start) + (hi - lo) + (d_final - lo);
}

/// Action time: actuator travel at ma_speed plus rotations at joint_speed.
inline double action_cost(const RobotModel& model, const Configuration& q_from,
                          const Action& a) {
  double rotation = 0.0;
  for (double dt : a.dtheta) rotation += std::abs(dt);
  return traverse_length(model, q_from, a) / model.ma_speed() +
         rotation / model.joint_speed();
}

/// A planned trajectory: K+1 waypoints joined by K actions, with cumulative
/// action times.
struct Path {
  std::vector<Configuration> waypoints;
  std::vector<Action> actions;
  std::vector<double> cum_time;  // size waypoints.size(); cum_time[0] == 0

  std::size_t steps() const { return actions.size(); }
  bool empty() const { return actions.empty(); }
  double total_time() const { return cum_time.empty() ? 0.0 : cum_time.back(); }
};

/// Re-sums the path's action costs, validating the waypoint/action chain.
inline double path_cost(const RobotModel& model, const Path& path) {
  if (path.waypoints.empty()) return 0.0;
  if (path.waypoints.size() != path.actions.size() + 1 ||
      path.cum_time.size() != path.waypoints.size())
    throw std::invalid_argument("path arrays are inconsistent");
  double total = 0.0;
  for (std::size_t k = 0; k < path.actions.size(); ++k) {
    const Configuration expect = apply_action(path.waypoints[k], path.actions[k]);
    const Configuration& got = path.waypoints[k + 1];
    for (std::size_t j = 0; j < expect.theta.size(); ++j) {
      if (std::abs(expect.theta[j] - got.theta[j]) > 1e-12)
        throw std::invalid_argument("waypoint does not match its action at step " +
                                    std::to_string(k));
    }
    if (std::abs(expect.d - got.d) > 1e-12)
      throw std::invalid_argument("waypoint does not match its action at step " +
                                  std::to_string(k));
    total += action_cost(model, path.waypoints[k], path.actions[k]);
  }
  return total;
}

}  // namespace masr
