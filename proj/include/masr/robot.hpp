#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "masr/rng.hpp"

namespace masr {

/// Joint angles plus the position d of the mobile actuator along the arm.
struct Configuration {
  std::vector<double> theta;  // [rad]
  double d = 0.0;             // [m], arc length from the base

  std::size_t joints() const { return theta.size(); }
};

/// Which link carries the mobile actuator, and where along it.
/// `link` is a 0-based link index; `offset` is the arc length past the
/// link's proximal joint.
struct MaLocation {
  std::size_t link = 0;
  double offset = 0.0;
};

/// Geometry and actuation limits of a minimally actuated serial arm:
/// passive revolute joints on a chain of rigid links, driven by a single
/// actuator travelling along the arm. Joint j can only be rotated while the
/// actuator sits at its anchor arc length r_j.
class RobotModel {
public:
  RobotModel(std::vector<double> link_lengths, std::vector<double> joint_bounds,
             double ma_speed, double joint_speed, double link_width)
      : lengths_(std::move(link_lengths)),
        bounds_(std::move(joint_bounds)),
        ma_speed_(ma_speed),
        joint_speed_(joint_speed),
        link_width_(link_width) {
    if (lengths_.empty()) throw std::invalid_argument("robot needs at least one link");
    if (bounds_.size() != lengths_.size())
      throw std::invalid_argument("joint bound count must match link count");
    anchors_.reserve(lengths_.size());
    total_ = 0.0;
    for (std::size_t j = 0; j < lengths_.size(); ++j) {
      if (lengths_[j] <= 0.0)
        throw std::invalid_argument("link " + std::to_string(j) + " has non-positive length");
      if (bounds_[j] < 0.0)
        throw std::invalid_argument("joint " + std::to_string(j) + " has negative bound");
      anchors_.push_back(total_);
      total_ += lengths_[j];
    }
    if (ma_speed_ <= 0.0) throw std::invalid_argument("ma_speed must be positive");
    if (joint_speed_ <= 0.0) throw std::invalid_argument("joint_speed must be positive");
    if (link_width_ < 0.0) throw std::invalid_argument("link_width must be non-negative");
  }

  std::size_t joint_count() const { return lengths_.size(); }
  double total_length() const { return total_; }
  const std::vector<double>& link_lengths() const { return lengths_; }
  const std::vector<double>& joint_bounds() const { return bounds_; }
  /// Arc-length position r_j of joint j's anchor (0-based; anchor 0 is the base).
  double joint_anchor(std::size_t j) const { return anchors_[j]; }
  const std::vector<double>& joint_anchors() const { return anchors_; }
  double ma_speed() const { return ma_speed_; }
  double joint_speed() const { return joint_speed_; }
  double link_width() const { return link_width_; }

  bool dimensions_match(const Configuration& q) const {
    return q.theta.size() == lengths_.size();
  }

  /// Joint-box and actuator-range feasibility. A small slack absorbs
  /// floating-point dust from interpolated configurations.
  bool feasible(const Configuration& q, double slack = 1e-9) const {
    if (!dimensions_match(q)) return false;
    for (std::size_t j = 0; j < bounds_.size(); ++j) {
      if (std::abs(q.theta[j]) > bounds_[j] + slack) return false;
    }
    return q.d >= -slack && q.d <= total_ + slack;
  }

  void require_feasible(const Configuration& q) const {
    if (!dimensions_match(q))
      throw std::domain_error("configuration has " + std::to_string(q.theta.size()) +
                              " joints, robot has " + std::to_string(lengths_.size()));
    for (std::size_t j = 0; j < bounds_.size(); ++j) {
      if (std::abs(q.theta[j]) > bounds_[j] + 1e-9)
        throw std::domain_error("joint " + std::to_string(j) + " angle " +
                                std::to_string(q.theta[j]) + " outside bound " +
                                std::to_string(bounds_[j]));
    }
    if (q.d < -1e-9 || q.d > total_ + 1e-9)
      throw std::domain_error("actuator position " + std::to_string(q.d) +
                              " outside [0, " + std::to_string(total_) + "]");
  }

  /// Splits d into (carrying link, offset). Right-continuous at anchors:
  /// d == r_j yields (j, 0); the arm tip d == l yields (n-1, l_{n-1}).
  MaLocation decompose_ma_position(double d) const {
    if (d < 0.0 || d > total_)
      throw std::domain_error("actuator position " + std::to_string(d) + " outside [0, " +
                              std::to_string(total_) + "]");
    if (d >= total_) return {lengths_.size() - 1, lengths_.back()};
    std::size_t link = 0;
    for (std::size_t j = lengths_.size(); j-- > 0;) {
      if (anchors_[j] <= d) {
        link = j;
        break;
      }
    }
    return {link, d - anchors_[link]};
  }

  /// Uniform draw over the feasible box (Eq. 5 region).
  Configuration sample_configuration(Rng& rng) const {
    Configuration q;
    q.theta.reserve(bounds_.size());
    for (double b : bounds_) q.theta.push_back(rng.uniform(-b, b));
    q.d = rng.uniform(0.0, total_);
    return q;
  }

private:
  std::vector<double> lengths_;
  std::vector<double> bounds_;
  std::vector<double> anchors_;
  double total_ = 0.0;
  double ma_speed_ = 0.0;
  double joint_speed_ = 0.0;
  double link_width_ = 0.0;
};

}  // namespace masr
