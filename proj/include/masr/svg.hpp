#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "masr/environment.hpp"
#include "masr/kinematics.hpp"
#include "masr/robot.hpp"
#include "masr/se2.hpp"

namespace masr::svg {

struct GoalMarker {
  PoseSE2 pose;
  double e_p = 0.008;
};

namespace detail {

inline std::string mm(double meters) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", meters * 1000.0);
  return buf;
}

}  // namespace detail

/// Renders the scene in millimeters (1 SVG unit = 1 mm): workspace square,
/// obstacles with their dashed inflated outlines, one arm group per waypoint
/// with an actuator marker, and the goal disc with a heading tick. All
/// geometry lives inside a y-up group, so coordinates in the file are plain
/// workspace millimeters.
inline std::string render(const Environment& env, const RobotModel& model,
                          const std::vector<Configuration>& waypoints,
                          const std::optional<GoalMarker>& goal) {
  using detail::mm;
  const double bound = env.bound > 0.0 ? env.bound : model.total_length();
  const double margin = 0.06 * bound + 0.02;
  const double half = (bound + margin) * 1000.0;

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << -half << ' ' << -half << ' '
      << 2 * half << ' ' << 2 * half << "\" width=\"720\" height=\"720\">\n";
  out << "<g transform=\"scale(1,-1)\">\n";

  out << "<rect class=\"workspace\" x=\"" << mm(-bound) << "\" y=\"" << mm(-bound)
      << "\" width=\"" << mm(2 * bound) << "\" height=\"" << mm(2 * bound)
      << "\" fill=\"none\" stroke=\"#888\" stroke-width=\"2\"/>\n";

  auto polygon = [&out](const Polygon& poly, const char* cls, const char* style) {
    out << "<polygon class=\"" << cls << "\" points=\"";
    for (std::size_t i = 0; i < poly.vertices().size(); ++i) {
      if (i) out << ' ';
      out << mm(poly.vertices()[i].x()) << ',' << mm(poly.vertices()[i].y());
    }
    out << "\" " << style << "/>\n";
  };
  for (const auto& p : env.inflated)
    polygon(p, "inflated", "fill=\"none\" stroke=\"#c77\" stroke-width=\"1.5\" "
                           "stroke-dasharray=\"8 6\"");
  for (const auto& p : env.obstacles)
    polygon(p, "obstacle", "fill=\"#c99\" stroke=\"#a55\" stroke-width=\"1.5\"");

  if (goal) {
    out << "<circle class=\"goal\" cx=\"" << mm(goal->pose.x) << "\" cy=\"" << mm(goal->pose.y)
        << "\" r=\"" << mm(goal->e_p)
        << "\" fill=\"none\" stroke=\"#2a2\" stroke-width=\"2\"/>\n";
    const double tick = std::max(3.0 * goal->e_p, 0.02);
    out << "<line class=\"goal-heading\" x1=\"" << mm(goal->pose.x) << "\" y1=\""
        << mm(goal->pose.y) << "\" x2=\"" << mm(goal->pose.x + tick * std::cos(goal->pose.phi))
        << "\" y2=\"" << mm(goal->pose.y + tick * std::sin(goal->pose.phi))
        << "\" stroke=\"#2a2\" stroke-width=\"2\"/>\n";
  }

  for (std::size_t w = 0; w < waypoints.size(); ++w) {
    const double fade =
        waypoints.size() > 1 ? 0.25 + 0.75 * static_cast<double>(w) /
                                          static_cast<double>(waypoints.size() - 1)
                             : 1.0;
    const auto pts = joint_positions(model, waypoints[w]);
    out << "<g class=\"arm\" stroke=\"#226\" stroke-opacity=\"" << fade
        << "\" stroke-width=\"" << std::max(model.link_width() * 1000.0, 2.0)
        << "\" stroke-linecap=\"round\">\n";
    for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
      out << "<line class=\"link\" x1=\"" << mm(pts[j].x()) << "\" y1=\"" << mm(pts[j].y())
          << "\" x2=\"" << mm(pts[j + 1].x()) << "\" y2=\"" << mm(pts[j + 1].y()) << "\"/>\n";
    }
    const MaLocation loc = model.decompose_ma_position(
        std::clamp(waypoints[w].d, 0.0, model.total_length()));
    const Eigen::Vector2d dir = (pts[loc.link + 1] - pts[loc.link]).normalized();
    const Eigen::Vector2d ma = pts[loc.link] + loc.offset * dir;
    out << "<circle class=\"ma\" cx=\"" << mm(ma.x()) << "\" cy=\"" << mm(ma.y()) << "\" r=\""
        << mm(0.012) << "\" fill=\"#d62\" fill-opacity=\"" << fade << "\" stroke=\"none\"/>\n";
    out << "</g>\n";
  }

  out << "</g>\n</svg>\n";
  return out.str();
}

}  // namespace masr::svg
