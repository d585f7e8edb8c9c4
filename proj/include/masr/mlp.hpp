#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "masr/rng.hpp"
#include "masr/robot.hpp"
#include "masr/se2.hpp"

namespace masr {

/// Hash of the robot's lengths and joint bounds; stored in model files so a
/// network is never silently applied to a different arm.
inline std::uint64_t robot_fingerprint(const RobotModel& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](double v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffULL;
      h *= 0x100000001b3ULL;
    }
  };
  for (double v : model.link_lengths()) mix(v);
  for (double v : model.joint_bounds()) mix(v);
  return h;
}

/// Fully connected tanh network mapping a desired gripper pose plus the
/// current configuration to an estimated configuration. The output layer is
/// squashed per coordinate onto the feasible box, so any weights produce a
/// feasible configuration.
struct MlpNetwork {
  std::vector<Eigen::MatrixXd> weights;  // layer l: out x in
  std::vector<Eigen::VectorXd> biases;
  Eigen::VectorXd input_scale;           // divisors applied to the raw input
  Eigen::VectorXd output_center;         // squash: center + halfspan * tanh(z)
  Eigen::VectorXd output_halfspan;
  std::string activation = "tanh";
  std::uint64_t fingerprint = 0;

  Eigen::Index input_size() const { return weights.empty() ? 0 : weights.front().cols(); }
  Eigen::Index output_size() const { return weights.empty() ? 0 : weights.back().rows(); }
  std::vector<Eigen::Index> hidden_sizes() const {
    std::vector<Eigen::Index> h;
    for (std::size_t l = 0; l + 1 < weights.size(); ++l) h.push_back(weights[l].rows());
    return h;
  }
};

/// Fresh network for the given robot: input (x, y, phi, q_c), output n+1
/// squashed coordinates. Xavier-uniform weights from the seed.
inline MlpNetwork make_network(const RobotModel& model, const std::vector<std::size_t>& hidden,
                               std::uint64_t seed) {
  const std::size_t n = model.joint_count();
  const Eigen::Index in = static_cast<Eigen::Index>(3 + n + 1);
  const Eigen::Index out = static_cast<Eigen::Index>(n + 1);

  MlpNetwork net;
  net.fingerprint = robot_fingerprint(model);

  net.input_scale.resize(in);
  const double l = model.total_length();
  net.input_scale(0) = l;
  net.input_scale(1) = l;
  net.input_scale(2) = kPi;
  for (std::size_t j = 0; j < n; ++j)
    net.input_scale(3 + static_cast<Eigen::Index>(j)) =
        model.joint_bounds()[j] > 0.0 ? model.joint_bounds()[j] : 1.0;
  net.input_scale(3 + static_cast<Eigen::Index>(n)) = l;

  net.output_center.resize(out);
  net.output_halfspan.resize(out);
  for (std::size_t j = 0; j < n; ++j) {
    net.output_center(static_cast<Eigen::Index>(j)) = 0.0;
    net.output_halfspan(static_cast<Eigen::Index>(j)) = model.joint_bounds()[j];
  }
  net.output_center(static_cast<Eigen::Index>(n)) = 0.5 * l;
  net.output_halfspan(static_cast<Eigen::Index>(n)) = 0.5 * l;

  Rng rng(seed);
  Eigen::Index prev = in;
  auto add_layer = [&](Eigen::Index rows) {
    const double a = std::sqrt(6.0 / static_cast<double>(rows + prev));
    Eigen::MatrixXd w(rows, prev);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < prev; ++c) w(r, c) = rng.uniform(-a, a);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Eigen::VectorXd::Zero(rows));
    prev = rows;
  };
  for (std::size_t h : hidden) add_layer(static_cast<Eigen::Index>(h));
  add_layer(out);
  return net;
}

inline Eigen::VectorXd encode_input(const MlpNetwork& net, const PoseSE2& x_d,
                                    const Configuration& q_c) {
  const Eigen::Index in = net.input_size();
  if (static_cast<Eigen::Index>(3 + q_c.theta.size() + 1) != in)
    throw std::invalid_argument("network input size does not match the configuration");
  Eigen::VectorXd v(in);
  v(0) = x_d.x;
  v(1) = x_d.y;
  v(2) = x_d.phi;
  for (std::size_t j = 0; j < q_c.theta.size(); ++j)
    v(3 + static_cast<Eigen::Index>(j)) = q_c.theta[j];
  v(in - 1) = q_c.d;
  return v.cwiseQuotient(net.input_scale);
}

/// Pre-squash forward pass (returns the raw output layer values).
inline Eigen::VectorXd mlp_forward_raw(const MlpNetwork& net, const Eigen::VectorXd& input) {
  Eigen::VectorXd z = input;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    z = (net.weights[l] * z + net.biases[l]).eval();
    if (l + 1 < net.weights.size()) z = z.array().tanh().matrix();
  }
  return z;
}

inline Configuration squash_output(const MlpNetwork& net, const Eigen::VectorXd& raw) {
  const Eigen::Index out = raw.size();
  Configuration q;
  q.theta.resize(static_cast<std::size_t>(out) - 1);
  for (Eigen::Index j = 0; j + 1 < out; ++j)
    q.theta[static_cast<std::size_t>(j)] =
        net.output_center(j) + net.output_halfspan(j) * std::tanh(raw(j));
  q.d = net.output_center(out - 1) + net.output_halfspan(out - 1) * std::tanh(raw(out - 1));
  return q;
}

/// Estimated configuration for a desired pose, given the current one.
inline Configuration mlp_forward(const MlpNetwork& net, const PoseSE2& x_d,
                                 const Configuration& q_c) {
  if (net.weights.empty()) throw std::invalid_argument("network has no layers");
  return squash_output(net, mlp_forward_raw(net, encode_input(net, x_d, q_c)));
}

/// Planner-facing alias: the trained network as an inverse-kinematics solver.
inline Configuration ik_solve(const MlpNetwork& net, const PoseSE2& x_d,
                              const Configuration& q_c) {
  return mlp_forward(net, x_d, q_c);
}

}  // namespace masr
