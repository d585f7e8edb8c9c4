#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "masr/geometry.hpp"
#include "masr/kinematics.hpp"
#include "masr/motion.hpp"
#include "masr/rng.hpp"
#include "masr/robot.hpp"

namespace masr {

/// Planar workspace: obstacle polygons plus their inflated counterparts
/// (margin 0.5 * link width, so the arm can be collision-checked as a
/// polyline). The workspace square [-l, l]^2 is bookkeeping for sampling and
/// rendering, not a collision constraint.
struct Environment {
  std::vector<Polygon> obstacles;
  std::vector<Polygon> inflated;
  double bound = 0.0;  // half-width of the workspace square

  Environment() = default;
  Environment(std::vector<Polygon> obs, double bound_)
      : obstacles(std::move(obs)), inflated(obstacles), bound(bound_) {}

  bool empty() const { return obstacles.empty(); }
};

/// Rebuilds the inflated set as the Minkowski sum of each obstacle with a
/// disc of radius width/2. The originals are untouched.
inline Environment inflate_obstacles(const Environment& env, double width) {
  if (width < 0.0) throw std::invalid_argument("obstacle margin width must be non-negative");
  Environment out = env;
  out.inflated.clear();
  out.inflated.reserve(env.obstacles.size());
  for (const auto& p : env.obstacles) out.inflated.push_back(inflate_polygon(p, 0.5 * width));
  return out;
}

enum class ConfigStatus { kFree, kBoundsViolation, kCollision };

struct ConfigCheck {
  ConfigStatus status = ConfigStatus::kFree;
  std::size_t index = 0;  // offending joint (bounds) or obstacle (collision)

  bool free() const { return status == ConfigStatus::kFree; }
};

/// Feasibility plus arm/obstacle clearance. The whole arm polyline is
/// checked against the inflated obstacles, independent of where the
/// actuator happens to sit.
inline ConfigCheck config_check(const Environment& env, const RobotModel& model,
                                const Configuration& q) {
  if (!model.dimensions_match(q)) return {ConfigStatus::kBoundsViolation, 0};
  for (std::size_t j = 0; j < model.joint_count(); ++j)
    if (std::abs(q.theta[j]) > model.joint_bounds()[j] + 1e-9)
      return {ConfigStatus::kBoundsViolation, j};
  if (q.d < -1e-9 || q.d > model.total_length() + 1e-9)
    return {ConfigStatus::kBoundsViolation, model.joint_count()};
  const auto pts = joint_positions(model, q);
  for (std::size_t o = 0; o < env.inflated.size(); ++o) {
    const Polygon& poly = env.inflated[o];
    for (std::size_t j = 0; j + 1 < pts.size(); ++j)
      if (poly.intersects_segment(pts[j], pts[j + 1])) return {ConfigStatus::kCollision, o};
  }
  return {};
}

inline bool config_free(const Environment& env, const RobotModel& model,
                        const Configuration& q) {
  return config_check(env, model, q).free();
}

inline constexpr double kDefaultAngleResolution = kPi / 360.0;  // 0.5 degrees

namespace detail {

/// Power-of-two subdivision count, so halving the resolution refines the
/// checked set instead of replacing it.
inline std::size_t rotation_substeps(double delta, double resolution) {
  const double needed = std::abs(delta) / resolution;
  std::size_t k = 1;
  while (static_cast<double>(k) < needed && k < (std::size_t{1} << 24)) k <<= 1;
  return k;
}

}  // namespace detail

/// Replays the motion convention from q_from to q_to, checking every
/// intermediate configuration. Rotations are discretized at most
/// `angle_resolution` apart; moves leave the arm shape untouched and need no
/// new obstacle checks.
inline bool motion_free(const Environment& env, const RobotModel& model,
                        const Configuration& q_from, const Configuration& q_to,
                        double angle_resolution = kDefaultAngleResolution) {
  if (!config_free(env, model, q_from) || !config_free(env, model, q_to)) return false;
  if (env.inflated.empty()) return true;

  const Action a = action_between(q_to, q_from);
  Configuration cur = q_from;
  for (const auto& step : expand_action(model, q_from, a)) {
    if (step.kind == MotionStep::Kind::Move) {
      cur.d = step.to_d;
      continue;
    }
    const double delta = step.to_angle - step.from_angle;
    const std::size_t k = detail::rotation_substeps(delta, angle_resolution);
    for (std::size_t i = 1; i <= k; ++i) {
      cur.theta[step.joint] =
          step.from_angle + delta * static_cast<double>(i) / static_cast<double>(k);
      if (!config_free(env, model, cur)) return false;
    }
  }
  return true;
}

/// Seed-deterministic scatter of convex obstacles: up to `max_obstacles`
/// hulls of 4-8 vertices, jointly covering at most `max_coverage` of the
/// workspace square and keeping clear of a small disc around the arm base.
inline Environment random_environment(const RobotModel& model, std::uint64_t seed,
                                      std::size_t max_obstacles, double max_coverage) {
  if (max_coverage <= 0.0 || max_coverage >= 1.0)
    throw std::invalid_argument("max_coverage must be in (0, 1)");
  if (max_obstacles == 0) throw std::invalid_argument("max_obstacles must be positive");

  const double l = model.total_length();
  const double workspace_area = 4.0 * l * l;
  const double base_clearance = 0.05 * l;
  Rng rng(seed);
  const std::size_t count = rng.uniform_int(1, max_obstacles);

  std::vector<Polygon> obstacles;
  double area_used = 0.0;
  int attempts = 0;
  while (obstacles.size() < count) {
    if (++attempts > 1000)
      throw std::runtime_error("random_environment: constraints unsatisfiable after 1000 attempts");
    const double budget = max_coverage * workspace_area - area_used;
    if (budget <= 0.0) break;
    const double r_cap = std::min(0.35 * l, std::sqrt(budget / kPi));
    const double radius = rng.uniform(0.25 * r_cap, r_cap);
    const double cx = rng.uniform(-(l - radius), l - radius);
    const double cy = rng.uniform(-(l - radius), l - radius);

    std::vector<Eigen::Vector2d> cloud;
    for (int i = 0; i < 10; ++i) {
      const double ang = rng.uniform(0.0, 2.0 * kPi);
      const double rr = radius * std::sqrt(rng.uniform01());
      cloud.emplace_back(cx + rr * std::cos(ang), cy + rr * std::sin(ang));
    }
    // monotone-chain hull
    std::sort(cloud.begin(), cloud.end(), [](const auto& a, const auto& b) {
      return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    std::vector<Eigen::Vector2d> hull;
    for (int pass = 0; pass < 2; ++pass) {
      const std::size_t base = hull.size();
      for (const auto& p : cloud) {
        while (hull.size() >= base + 2 &&
               cross2(hull[hull.size() - 1] - hull[hull.size() - 2],
                      p - hull[hull.size() - 2]) <= 0.0)
          hull.pop_back();
        hull.push_back(p);
      }
      hull.pop_back();
      std::reverse(cloud.begin(), cloud.end());
    }
    if (hull.size() < 4 || hull.size() > 8) continue;

    Polygon poly(std::move(hull));
    if (area_used + poly.area() > max_coverage * workspace_area) continue;
    const Eigen::Vector2d origin(0.0, 0.0);
    if (poly.distance(origin) <= base_clearance) continue;
    area_used += poly.area();
    obstacles.push_back(std::move(poly));
  }
  if (obstacles.empty())
    throw std::runtime_error("random_environment: constraints unsatisfiable after 1000 attempts");

  Environment env(std::move(obstacles), l);
  return inflate_obstacles(env, model.link_width());
}

}  // namespace masr
