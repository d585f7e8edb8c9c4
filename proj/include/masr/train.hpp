#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "masr/dataset.hpp"
#include "masr/kinematics.hpp"
#include "masr/mlp.hpp"
#include "masr/rng.hpp"
#include "masr/se2.hpp"

namespace masr {

/// Which redundancy-resolution penalty the loss carries: plain joint-angle
/// change, or the action-time weighting that also charges for how far the
/// actuator must travel to reach each joint.
enum class RegKind { kJointDelta, kActionTime };

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.99;

struct TrainHyper {
  RegKind reg = RegKind::kActionTime;
  double lambda = 0.001;
  double learning_rate = 1e-4;
  std::size_t batch_size = 500;
  std::size_t epochs = 300;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden = {120, 100, 50, 30};
  // pose-term weights make the loss roughly isotropic at the goal
  // tolerances: 8 mm of position and 4 deg of heading cost about the same
  double pose_weight_v = 100.0;    // [1/m^2] on the translational twist
  double pose_weight_omega = 1.0;  // on the rotational twist
  double smoothing_eps = 1e-6;     // |.| smoothing while training
};

/// Exact (unsmoothed) regularizer value; also the action-time figure used to
/// rank candidate IK solutions.
inline double regularizer_value(const RobotModel& model, const Configuration& q_c,
                                const Configuration& q_tilde, RegKind kind) {
  double sum = 0.0;
  for (std::size_t i = 0; i < q_c.theta.size(); ++i) {
    const double dt = std::abs(q_c.theta[i] - q_tilde.theta[i]);
    if (kind == RegKind::kJointDelta) {
      sum += dt;
    } else {
      sum += dt / model.joint_speed() * std::abs(q_c.d - model.joint_anchor(i)) /
             model.ma_speed();
    }
  }
  return sum;
}

struct IkLoss {
  double value = 0.0;
  double pose_term = 0.0;
  double reg_term = 0.0;  // unweighted (multiply by lambda for the total)
  Eigen::VectorXd grad;   // d value / d q_tilde, size n+1
  double dp = 0.0;        // exact position error of f(q_tilde) vs x_d [m]
  double dphi = 0.0;      // exact wrapped heading error [rad]
};

/// Loss of a candidate configuration against a desired pose: weighted squared
/// twist of log(x_d^{-1} f(q_tilde)) plus lambda times the smoothed
/// regularizer. The gradient flows through the FK differential and the
/// log-map differential; the regularizer only touches the joint coordinates.
inline IkLoss ik_loss(const RobotModel& model, const Configuration& q_c, const PoseSE2& x_d,
                      const Configuration& q_tilde, const TrainHyper& hyper) {
  const PoseSE2 x_t = forward_kinematics(model, q_tilde);
  const Twist v = pose_log(x_d, x_t);

  IkLoss out;
  out.pose_term = hyper.pose_weight_v * (v.vx * v.vx + v.vy * v.vy) +
                  hyper.pose_weight_omega * v.omega * v.omega;
  out.dp = std::hypot(x_t.x - x_d.x, x_t.y - x_d.y);
  out.dphi = std::abs(normalize_angle(x_t.phi - x_d.phi));

  const Eigen::Vector3d dpose_dv(2.0 * hyper.pose_weight_v * v.vx,
                                 2.0 * hyper.pose_weight_v * v.vy,
                                 2.0 * hyper.pose_weight_omega * v.omega);
  const Eigen::Vector3d dpose_dx = pose_log_jacobian(x_d, x_t).transpose() * dpose_dv;
  out.grad = fk_jacobian(model, q_tilde).transpose() * dpose_dx;

  const double eps2 = hyper.smoothing_eps * hyper.smoothing_eps;
  for (std::size_t i = 0; i < q_c.theta.size(); ++i) {
    const double z = q_tilde.theta[i] - q_c.theta[i];
    const double sz = std::sqrt(z * z + eps2);
    double w = 1.0;
    if (hyper.reg == RegKind::kActionTime)
      w = std::abs(q_c.d - model.joint_anchor(i)) / (model.joint_speed() * model.ma_speed());
    out.reg_term += w * sz;
    out.grad(static_cast<Eigen::Index>(i)) += hyper.lambda * w * (z / sz);
  }
  out.value = out.pose_term + hyper.lambda * out.reg_term;
  return out;
}

struct BatchGradient {
  double mean_loss = 0.0;
  double sum_dp = 0.0;
  double sum_dphi = 0.0;
  std::vector<Eigen::MatrixXd> dw;
  std::vector<Eigen::VectorXd> db;
};

/// Mean ik_loss over a batch and its gradient with respect to every weight
/// and bias, by backpropagation through the squash and the tanh stack.
inline BatchGradient batch_gradient(const MlpNetwork& net, const RobotModel& model,
                                    const std::vector<PoseSE2>& targets,
                                    const std::vector<Configuration>& starts,
                                    const TrainHyper& hyper) {
  if (targets.size() != starts.size() || targets.empty())
    throw std::invalid_argument("batch targets and starts must align");
  const std::size_t layers = net.weights.size();
  const Eigen::Index bsz = static_cast<Eigen::Index>(targets.size());

  std::vector<Eigen::MatrixXd> acts(layers + 1);
  acts[0].resize(net.input_size(), bsz);
  for (Eigen::Index k = 0; k < bsz; ++k)
    acts[0].col(k) = encode_input(net, targets[static_cast<std::size_t>(k)],
                                  starts[static_cast<std::size_t>(k)]);
  for (std::size_t l = 0; l < layers; ++l) {
    acts[l + 1] = (net.weights[l] * acts[l]).colwise() + net.biases[l];
    if (l + 1 < layers) acts[l + 1] = acts[l + 1].array().tanh().matrix();
  }

  BatchGradient out;
  Eigen::MatrixXd delta(net.output_size(), bsz);
  double loss_sum = 0.0;
  for (Eigen::Index k = 0; k < bsz; ++k) {
    const Eigen::VectorXd raw = acts[layers].col(k);
    const Configuration q_t = squash_output(net, raw);
    const IkLoss sample = ik_loss(model, starts[static_cast<std::size_t>(k)],
                                  targets[static_cast<std::size_t>(k)], q_t, hyper);
    loss_sum += sample.value;
    out.sum_dp += sample.dp;
    out.sum_dphi += sample.dphi;
    const Eigen::ArrayXd th = raw.array().tanh();
    delta.col(k) = (sample.grad.array() * net.output_halfspan.array() * (1.0 - th * th))
                       .matrix() /
                   static_cast<double>(bsz);
  }
  out.mean_loss = loss_sum / static_cast<double>(bsz);

  out.dw.resize(layers);
  out.db.resize(layers);
  for (std::size_t l = layers; l-- > 0;) {
    out.dw[l] = delta * acts[l].transpose();
    out.db[l] = delta.rowwise().sum();
    if (l > 0)
      delta = ((net.weights[l].transpose() * delta).array() *
               (1.0 - acts[l].array().square()))
                  .matrix();
  }
  return out;
}

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double mean_dp_mm = 0.0;
  double mean_dphi_deg = 0.0;
};

struct TrainResult {
  MlpNetwork net;
  std::vector<EpochStats> log;
};

/// Minibatch Adam on the mean ik_loss over the pose dataset. Every epoch
/// draws a fresh random feasible q_c for every pose, so the network sees the
/// same targets from ever-changing start configurations. Deterministic per
/// seed; throws on divergence.
inline TrainResult train(const RobotModel& model, const PoseDataset& dataset,
                         const TrainHyper& hyper) {
  if (dataset.poses.empty()) throw std::invalid_argument("training dataset is empty");
  if (hyper.batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (hyper.lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");

  TrainResult result;
  result.net = make_network(model, hyper.hidden, derive_seed(hyper.seed, 0));
  MlpNetwork& net = result.net;
  const std::size_t layers = net.weights.size();

  std::vector<Eigen::MatrixXd> mw(layers), vw(layers);
  std::vector<Eigen::VectorXd> mb(layers), vb(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    mw[l] = Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols());
    vw[l] = mw[l];
    mb[l] = Eigen::VectorXd::Zero(net.biases[l].size());
    vb[l] = mb[l];
  }
  const double beta1 = kAdamBeta1, beta2 = kAdamBeta2, adam_eps = 1e-8;
  std::size_t adam_t = 0;

  Rng rng(derive_seed(hyper.seed, 1));
  std::vector<std::size_t> order(dataset.poses.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0, dp_sum = 0.0, dphi_sum = 0.0;

    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
      const std::size_t bsz = std::min(hyper.batch_size, order.size() - start);
      std::vector<PoseSE2> targets(bsz);
      std::vector<Configuration> starts(bsz);
      for (std::size_t k = 0; k < bsz; ++k) {
        targets[k] = dataset.poses[order[start + k]];
        starts[k] = model.sample_configuration(rng);
      }
      const BatchGradient grad = batch_gradient(net, model, targets, starts, hyper);
      loss_sum += grad.mean_loss * static_cast<double>(bsz);
      dp_sum += grad.sum_dp;
      dphi_sum += grad.sum_dphi;

      ++adam_t;
      const double corr1 = 1.0 - std::pow(beta1, static_cast<double>(adam_t));
      const double corr2 = 1.0 - std::pow(beta2, static_cast<double>(adam_t));
      for (std::size_t l = 0; l < layers; ++l) {
        if (!grad.dw[l].allFinite() || !grad.db[l].allFinite())
          throw std::runtime_error("training diverged (non-finite gradient) at epoch " +
                                   std::to_string(epoch));
        mw[l] = beta1 * mw[l] + (1.0 - beta1) * grad.dw[l];
        vw[l] = beta2 * vw[l] + (1.0 - beta2) * grad.dw[l].cwiseProduct(grad.dw[l]);
        net.weights[l].array() -= hyper.learning_rate * (mw[l].array() / corr1) /
                                  ((vw[l].array() / corr2).sqrt() + adam_eps);
        mb[l] = beta1 * mb[l] + (1.0 - beta1) * grad.db[l];
        vb[l] = beta2 * vb[l] + (1.0 - beta2) * grad.db[l].cwiseProduct(grad.db[l]);
        net.biases[l].array() -= hyper.learning_rate * (mb[l].array() / corr1) /
                                 ((vb[l].array() / corr2).sqrt() + adam_eps);
      }
    }

    const double count = static_cast<double>(order.size());
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = loss_sum / count;
    stats.mean_dp_mm = dp_sum / count * 1000.0;
    stats.mean_dphi_deg = rad_to_deg(dphi_sum / count);
    if (!std::isfinite(stats.mean_loss))
      throw std::runtime_error("training diverged (non-finite loss) at epoch " +
                               std::to_string(epoch));
    result.log.push_back(stats);
  }
  return result;
}

}  // namespace masr
