#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <vector>

#include "masr/robot.hpp"
#include "masr/se2.hpp"

namespace masr {

/// Gripper pose of the mobile actuator: chain the links up to the carrying
/// one, then walk the offset along it. Heading is the cumulative joint angle
/// through the carrying link.
inline PoseSE2 forward_kinematics(const RobotModel& model, const Configuration& q) {
  model.require_feasible(q);
  const MaLocation loc = model.decompose_ma_position(std::clamp(q.d, 0.0, model.total_length()));
  double x = 0.0, y = 0.0, heading = 0.0;
  for (std::size_t j = 0; j < loc.link; ++j) {
    heading += q.theta[j];
    x += model.link_lengths()[j] * std::cos(heading);
    y += model.link_lengths()[j] * std::sin(heading);
  }
  heading += q.theta[loc.link];
  x += loc.offset * std::cos(heading);
  y += loc.offset * std::sin(heading);
  return {x, y, heading};
}

/// World positions of the base and all n joint-to-joint endpoints,
/// independent of the actuator position. points[j] .. points[j+1] is link j.
inline std::vector<Eigen::Vector2d> joint_positions(const RobotModel& model,
                                                    const Configuration& q) {
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(model.joint_count() + 1);
  double x = 0.0, y = 0.0, heading = 0.0;
  pts.emplace_back(0.0, 0.0);
  for (std::size_t j = 0; j < model.joint_count(); ++j) {
    heading += q.theta[j];
    x += model.link_lengths()[j] * std::cos(heading);
    y += model.link_lengths()[j] * std::sin(heading);
    pts.emplace_back(x, y);
  }
  return pts;
}

/// Analytic differential of forward_kinematics: rows d(x, y, phi), columns
/// (theta_0 .. theta_{n-1}, d). Joints at or beyond the actuator contribute
/// zero position columns; d(phi)/dd is zero. At a link boundary the
/// right-limit piece applies (the same convention as decompose_ma_position).
inline Eigen::Matrix3Xd fk_jacobian(const RobotModel& model, const Configuration& q) {
  model.require_feasible(q);
  const MaLocation loc = model.decompose_ma_position(std::clamp(q.d, 0.0, model.total_length()));
  const std::size_t n = model.joint_count();

  // anchor point of each joint up to the carrying link, then the MA point
  std::vector<double> ax(loc.link + 1), ay(loc.link + 1);
  double x = 0.0, y = 0.0, heading = 0.0;
  for (std::size_t j = 0; j < loc.link; ++j) {
    ax[j] = x;
    ay[j] = y;
    heading += q.theta[j];
    x += model.link_lengths()[j] * std::cos(heading);
    y += model.link_lengths()[j] * std::sin(heading);
  }
  ax[loc.link] = x;
  ay[loc.link] = y;
  heading += q.theta[loc.link];
  const double px = x + loc.offset * std::cos(heading);
  const double py = y + loc.offset * std::sin(heading);

  Eigen::Matrix3Xd jac = Eigen::Matrix3Xd::Zero(3, static_cast<Eigen::Index>(n) + 1);
  for (std::size_t j = 0; j <= loc.link; ++j) {
    jac(0, static_cast<Eigen::Index>(j)) = -(py - ay[j]);
    jac(1, static_cast<Eigen::Index>(j)) = px - ax[j];
    jac(2, static_cast<Eigen::Index>(j)) = 1.0;
  }
  jac(0, static_cast<Eigen::Index>(n)) = std::cos(heading);
  jac(1, static_cast<Eigen::Index>(n)) = std::sin(heading);
  return jac;
}

}  // namespace masr
