#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "masr/kinematics.hpp"
#include "masr/rng.hpp"
#include "masr/robot.hpp"
#include "masr/se2.hpp"
#include "masr/train.hpp"

namespace masr {

/// Reduced arm used by one restart group: the first `active_joints` revolute
/// joints plus a prismatic coordinate sliding along the link right after the
/// last active joint, standing in for the actuator. Group k therefore covers
/// exactly the poses whose actuator sits on link k-1 (0-based); the groups
/// k = 1..n jointly cover the whole workspace. Solutions lift to full
/// configurations by zero-padding the distal joints.
struct SubchainSpec {
  std::size_t active_joints = 1;  // k in [1, n]

  std::size_t carrying_link() const { return active_joints - 1; }
};

struct NrParams {
  std::size_t max_iters = 100;
  double tol = 1e-8;      // on the twist norm
  double damping = 1e-3;  // Levenberg-style diagonal added to J^T J
  double e_p = 0.008;     // success thresholds of the goal region
  double e_phi = deg_to_rad(4.0);
};

struct NrOutcome {
  bool success = false;
  Eigen::VectorXd state;  // theta_0..theta_{k-1}, prismatic offset
  std::size_t iters = 0;
  double dp = 0.0;
  double dphi = 0.0;
};

namespace detail {

inline PoseSE2 subchain_fk(const RobotModel& model, const SubchainSpec& spec,
                           const Eigen::VectorXd& state) {
  const std::size_t k = spec.active_joints;
  double x = 0.0, y = 0.0, heading = 0.0;
  for (std::size_t j = 0; j + 1 < k; ++j) {
    heading += state(static_cast<Eigen::Index>(j));
    x += model.link_lengths()[j] * std::cos(heading);
    y += model.link_lengths()[j] * std::sin(heading);
  }
  heading += state(static_cast<Eigen::Index>(k) - 1);
  const double s = state(state.size() - 1);
  return {x + s * std::cos(heading), y + s * std::sin(heading), heading};
}

inline Eigen::Matrix3Xd subchain_jacobian(const RobotModel& model, const SubchainSpec& spec,
                                          const Eigen::VectorXd& state) {
  const std::size_t k = spec.active_joints;
  std::vector<double> ax(k), ay(k);
  double x = 0.0, y = 0.0, heading = 0.0;
  for (std::size_t j = 0; j + 1 < k; ++j) {
    ax[j] = x;
    ay[j] = y;
    heading += state(static_cast<Eigen::Index>(j));
    x += model.link_lengths()[j] * std::cos(heading);
    y += model.link_lengths()[j] * std::sin(heading);
  }
  ax[k - 1] = x;
  ay[k - 1] = y;
  heading += state(static_cast<Eigen::Index>(k) - 1);
  const double s = state(state.size() - 1);
  const double px = x + s * std::cos(heading);
  const double py = y + s * std::sin(heading);

  Eigen::Matrix3Xd jac(3, state.size());
  for (std::size_t j = 0; j < k; ++j) {
    jac(0, static_cast<Eigen::Index>(j)) = -(py - ay[j]);
    jac(1, static_cast<Eigen::Index>(j)) = px - ax[j];
    jac(2, static_cast<Eigen::Index>(j)) = 1.0;
  }
  jac(0, state.size() - 1) = std::cos(heading);
  jac(1, state.size() - 1) = std::sin(heading);
  jac(2, state.size() - 1) = 0.0;
  return jac;
}

inline void clamp_subchain(const RobotModel& model, const SubchainSpec& spec,
                           Eigen::VectorXd& state) {
  for (std::size_t j = 0; j < spec.active_joints; ++j) {
    const double b = model.joint_bounds()[j];
    state(static_cast<Eigen::Index>(j)) =
        std::clamp(state(static_cast<Eigen::Index>(j)), -b, b);
  }
  const double max_s = model.link_lengths()[spec.carrying_link()];
  state(state.size() - 1) = std::clamp(state(state.size() - 1), 0.0, max_s);
}

}  // namespace detail

/// Lifts a sub-chain state to a full configuration: distal joints at rest,
/// actuator on the carrying link at the prismatic offset.
inline Configuration lift_subchain(const RobotModel& model, const SubchainSpec& spec,
                                   const Eigen::VectorXd& state) {
  Configuration q;
  q.theta.assign(model.joint_count(), 0.0);
  for (std::size_t j = 0; j < spec.active_joints; ++j)
    q.theta[j] = state(static_cast<Eigen::Index>(j));
  q.d = model.joint_anchor(spec.carrying_link()) + state(state.size() - 1);
  return q;
}

/// Damped Newton iteration on the twist error log(x_d^{-1} f(.)), clamped to
/// the sub-chain bounds each step. Succeeds when the final pose lands within
/// (e_p, e_phi) of the target.
inline NrOutcome nr_solve_subchain(const RobotModel& model, const SubchainSpec& spec,
                                   const PoseSE2& x_d, const Eigen::VectorXd& start,
                                   const NrParams& params = {}) {
  if (spec.active_joints < 1 || spec.active_joints > model.joint_count())
    throw std::invalid_argument("sub-chain active joint count out of range");
  if (start.size() != static_cast<Eigen::Index>(spec.active_joints) + 1)
    throw std::invalid_argument("sub-chain start state has the wrong dimension");

  NrOutcome out;
  out.state = start;
  detail::clamp_subchain(model, spec, out.state);

  for (out.iters = 0; out.iters < params.max_iters; ++out.iters) {
    const PoseSE2 pose = detail::subchain_fk(model, spec, out.state);
    const Twist v = pose_log(x_d, pose);
    if (std::sqrt(v.squared_norm()) <= params.tol) break;

    const Eigen::Matrix3Xd d_twist =
        pose_log_jacobian(x_d, pose) * detail::subchain_jacobian(model, spec, out.state);
    const Eigen::MatrixXd h =
        d_twist.transpose() * d_twist +
        params.damping * Eigen::MatrixXd::Identity(out.state.size(), out.state.size());
    const Eigen::VectorXd g = d_twist.transpose() * Eigen::Vector3d(v.vx, v.vy, v.omega);
    out.state -= h.ldlt().solve(g);
    detail::clamp_subchain(model, spec, out.state);
  }

  const PoseSE2 pose = detail::subchain_fk(model, spec, out.state);
  out.dp = std::hypot(pose.x - x_d.x, pose.y - x_d.y);
  out.dphi = std::abs(normalize_angle(pose.phi - x_d.phi));
  out.success = out.dp <= params.e_p && out.dphi <= params.e_phi;
  return out;
}

struct RestartRecord {
  std::size_t subchain = 0;   // active joint count of the group
  bool success = false;
  Configuration solution;     // lifted; meaningful when success
  double action_time = 0.0;   // exact action-time regularizer vs q_c
};

struct IkNumericResult {
  std::optional<Configuration> solution;
  double action_time = 0.0;
  double dp = 0.0;
  double dphi = 0.0;
  std::vector<RestartRecord> restarts;
};

/// Multi-restart numeric IK: m restarts split evenly across the n sub-chain
/// groups, random starts uniform in each group's box, returning the success
/// with the smallest action-time cost from q_c. Deterministic per seed.
inline IkNumericResult ik_numeric(const RobotModel& model, const PoseSE2& x_d,
                                  const Configuration& q_c, std::size_t m, std::uint64_t seed,
                                  const NrParams& params = {}) {
  const std::size_t n = model.joint_count();
  if (m < n) throw std::invalid_argument("need at least one restart per sub-chain group");

  Rng rng(seed);
  IkNumericResult result;
  result.restarts.reserve(m);
  std::size_t best = static_cast<std::size_t>(-1);

  for (std::size_t k = 1; k <= n; ++k) {
    const SubchainSpec spec{k};
    const std::size_t share = m / n + (k - 1 < m % n ? 1 : 0);
    for (std::size_t r = 0; r < share; ++r) {
      Eigen::VectorXd start(static_cast<Eigen::Index>(k) + 1);
      for (std::size_t j = 0; j < k; ++j)
        start(static_cast<Eigen::Index>(j)) =
            rng.uniform(-model.joint_bounds()[j], model.joint_bounds()[j]);
      start(start.size() - 1) = rng.uniform(0.0, model.link_lengths()[spec.carrying_link()]);

      const NrOutcome outcome = nr_solve_subchain(model, spec, x_d, start, params);
      RestartRecord rec;
      rec.subchain = k;
      rec.success = outcome.success;
      if (outcome.success) {
        rec.solution = lift_subchain(model, spec, outcome.state);
        rec.action_time = regularizer_value(model, q_c, rec.solution, RegKind::kActionTime);
        if (best == static_cast<std::size_t>(-1) ||
            rec.action_time < result.restarts[best].action_time) {
          best = result.restarts.size();
          result.dp = outcome.dp;
          result.dphi = outcome.dphi;
        }
      }
      result.restarts.push_back(std::move(rec));
    }
  }
  if (best != static_cast<std::size_t>(-1)) {
    result.solution = result.restarts[best].solution;
    result.action_time = result.restarts[best].action_time;
  }
  return result;
}

}  // namespace masr
