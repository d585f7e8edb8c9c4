#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "masr/environment.hpp"
#include "masr/ik_numeric.hpp"
#include "masr/kinematics.hpp"
#include "masr/motion.hpp"
#include "masr/rng.hpp"
#include "masr/robot.hpp"
#include "masr/se2.hpp"

namespace masr {

inline constexpr double kInfiniteTime = std::numeric_limits<double>::infinity();
inline constexpr std::size_t kNoNode = static_cast<std::size_t>(-1);

struct TreeNode {
  Configuration q;
  std::size_t parent = kNoNode;  // kNoNode for the root
  Action action;                 // from parent to this node (zero for the root)
  double cost = 0.0;             // action time of `action`
  double tau = 0.0;              // cumulative time from the root
  std::uint64_t serial = 0;      // stable identity (arena indices can be reused)
  std::vector<std::size_t> children;
};

/// Search tree over configurations; nodes are arena-indexed and keep parent,
/// child and cumulative-time bookkeeping consistent.
class Tree {
public:
  explicit Tree(Configuration root) {
    TreeNode v;
    v.q = std::move(root);
    v.action.dtheta.assign(v.q.theta.size(), 0.0);
    nodes_.push_back(std::move(v));
  }

  std::size_t size() const { return nodes_.size(); }
  const TreeNode& node(std::size_t i) const { return nodes_[i]; }
  TreeNode& node(std::size_t i) { return nodes_[i]; }

  std::size_t add(TreeNode v) {
    const std::size_t id = nodes_.size();
    if (v.parent != kNoNode) nodes_[v.parent].children.push_back(id);
    v.serial = next_serial_++;
    nodes_.push_back(std::move(v));
    return id;
  }

  /// Removes the most recently added node (it must be childless).
  void pop_last() {
    const TreeNode& v = nodes_.back();
    if (!v.children.empty()) throw std::logic_error("pop_last on a node with children");
    if (v.parent != kNoNode) nodes_[v.parent].children.pop_back();
    nodes_.pop_back();
  }

  /// Reattaches `child` under `new_parent` and refreshes cumulative times of
  /// the whole subtree.
  void reparent(std::size_t child, std::size_t new_parent, Action action, double cost) {
    TreeNode& c = nodes_[child];
    auto& siblings = nodes_[c.parent].children;
    siblings.erase(std::find(siblings.begin(), siblings.end(), child));
    c.parent = new_parent;
    c.action = std::move(action);
    c.cost = cost;
    nodes_[new_parent].children.push_back(child);
    refresh_subtree(child);
  }

  void refresh_subtree(std::size_t id) {
    std::vector<std::size_t> stack{id};
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      TreeNode& v = nodes_[cur];
      v.tau = (v.parent == kNoNode ? 0.0 : nodes_[v.parent].tau) + v.cost;
      for (std::size_t ch : v.children) stack.push_back(ch);
    }
  }

private:
  std::vector<TreeNode> nodes_;
  std::uint64_t next_serial_ = 1;  // the root keeps serial 0
};

/// Uniform feasible configuration that passes the collision check; gives up
/// after 10,000 rejections.
inline Configuration sample_free(const Environment& env, const RobotModel& model, Rng& rng) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Configuration q = model.sample_configuration(rng);
    if (config_free(env, model, q)) return q;
  }
  throw std::runtime_error("sample_free: rejection budget exhausted");
}

/// Node with the cheapest action time toward q_rand; ties break to the
/// lowest index.
inline std::size_t nearest(const Tree& tree, const RobotModel& model,
                           const Configuration& q_rand) {
  std::size_t best = 0;
  double best_cost = kInfiniteTime;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const double c = action_cost(model, tree.node(i).q, action_between(q_rand, tree.node(i).q));
    if (c < best_cost) {
      best_cost = c;
      best = i;
    }
  }
  return best;
}

/// Up to `count` nodes cheapest toward q, skipping `excluded` ids.
inline std::vector<std::size_t> near(const Tree& tree, const RobotModel& model,
                                     const Configuration& q, std::size_t count,
                                     const std::unordered_set<std::size_t>& excluded) {
  std::vector<std::pair<double, std::size_t>> ranked;
  ranked.reserve(tree.size());
  for (std::size_t i = 0; i < tree.size(); ++i) {
    if (excluded.count(i)) continue;
    ranked.emplace_back(action_cost(model, tree.node(i).q, action_between(q, tree.node(i).q)),
                        i);
  }
  const std::size_t keep = std::min(count, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep),
                    ranked.end());
  std::vector<std::size_t> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(ranked[i].second);
  return out;
}

/// Fractional step from a tree node toward a random configuration.
inline TreeNode steer(const Tree& tree, std::size_t from, const Configuration& q_rand,
                      double delta, const RobotModel& model) {
  const TreeNode& v = tree.node(from);
  Action a = action_between(q_rand, v.q);
  for (double& dt : a.dtheta) dt *= delta;
  a.dd *= delta;
  TreeNode out;
  out.q = apply_action(v.q, a);
  out.parent = from;
  out.cost = action_cost(model, v.q, a);
  out.action = std::move(a);
  out.tau = v.tau + out.cost;
  return out;
}

/// IK-driven step from a tree node toward the goal pose.
inline TreeNode propagate_ik(const Tree& tree, std::size_t from, const PoseSE2& x_goal,
                             const std::function<Configuration(const PoseSE2&, const Configuration&)>& ik,
                             const RobotModel& model) {
  const TreeNode& v = tree.node(from);
  TreeNode out;
  out.q = ik(x_goal, v.q);
  out.parent = from;
  out.action = action_between(out.q, v.q);
  out.cost = action_cost(model, v.q, out.action);
  out.tau = v.tau + out.cost;
  return out;
}

/// Picks the parent among {current parent} + U that minimizes the arrival
/// time of v_new, keeping only collision-free connections.
inline void connect(const Tree& tree, const std::vector<std::size_t>& candidates,
                    TreeNode& v_new, const Environment& env, const RobotModel& model,
                    double angle_resolution) {
  for (std::size_t u : candidates) {
    if (u == v_new.parent) continue;
    const Action a = action_between(v_new.q, tree.node(u).q);
    const double c = action_cost(model, tree.node(u).q, a);
    const double tau = tree.node(u).tau + c;
    if (tau < v_new.tau && motion_free(env, model, tree.node(u).q, v_new.q, angle_resolution)) {
      v_new.parent = u;
      v_new.action = a;
      v_new.cost = c;
      v_new.tau = tau;
    }
  }
}

/// Reroutes neighbors through v_new wherever that strictly lowers their
/// arrival time (collision-checked); descendants' times are refreshed.
inline std::size_t rewire(Tree& tree, const std::vector<std::size_t>& candidates,
                          std::size_t v_new, const Environment& env, const RobotModel& model,
                          double angle_resolution) {
  std::size_t count = 0;
  for (std::size_t u : candidates) {
    if (u == v_new || u == tree.node(v_new).parent) continue;
    const Action a = action_between(tree.node(u).q, tree.node(v_new).q);
    const double c = action_cost(model, tree.node(v_new).q, a);
    const double tau = tree.node(v_new).tau + c;
    if (tau < tree.node(u).tau &&
        motion_free(env, model, tree.node(v_new).q, tree.node(u).q, angle_resolution)) {
      tree.reparent(u, v_new, a, c);
      ++count;
    }
  }
  return count;
}

struct GoalHit {
  std::size_t link = 0;  // 0-based qualifying link
  double d_goal = 0.0;   // actuator position that lands the gripper on goal
};

/// Checks whether any link of the arm passes through the goal region: the
/// goal point within e_p of the link segment and the link heading within
/// e_phi of the goal heading. Returns the first qualifying link and the
/// actuator position of the projected goal point.
inline std::optional<GoalHit> on_goal(const RobotModel& model, const PoseSE2& x_goal,
                                      const Configuration& q, double e_p, double e_phi) {
  const auto pts = joint_positions(model, q);
  const Eigen::Vector2d goal(x_goal.x, x_goal.y);
  double heading = 0.0;
  for (std::size_t i = 0; i < model.joint_count(); ++i) {
    heading += q.theta[i];
    if (point_segment_distance(goal, pts[i], pts[i + 1]) > e_p) continue;
    if (std::abs(normalize_angle(heading - x_goal.phi)) > e_phi) continue;
    const Eigen::Vector2d dir = pts[i + 1] - pts[i];
    const double len = model.link_lengths()[i];
    double proj = (goal - pts[i]).dot(dir) / len;
    proj = std::clamp(proj, 0.0, len);
    // stay on this link's piece: exactly hitting the next anchor would hand
    // the heading over to the (unchecked) next joint
    if (i + 1 < model.joint_count()) proj = std::min(proj, len - 1e-12);
    return GoalHit{i, model.joint_anchor(i) + proj};
  }
  return std::nullopt;
}

/// Corrects a goal-touching node: parks the actuator on the goal point and
/// reverts rotations of joints beyond it to the parent's angles (they no
/// longer matter). The reworked motion is re-validated; rejection discards
/// the node.
inline std::optional<TreeNode> goal_fix(const PoseSE2& x_goal, const Tree& tree,
                                        const TreeNode& v_new, const GoalHit& hit,
                                        const RobotModel& model, const Environment& env,
                                        double angle_resolution) {
  (void)x_goal;
  const TreeNode& parent = tree.node(v_new.parent);
  TreeNode fixed = v_new;
  fixed.q.d = hit.d_goal;
  for (std::size_t j = 0; j < model.joint_count(); ++j)
    if (model.joint_anchor(j) > hit.d_goal) fixed.q.theta[j] = parent.q.theta[j];
  fixed.action = action_between(fixed.q, parent.q);
  fixed.cost = action_cost(model, parent.q, fixed.action);
  fixed.tau = parent.tau + fixed.cost;
  if (!motion_free(env, model, parent.q, fixed.q, angle_resolution)) return std::nullopt;
  return fixed;
}

struct PlannerParams {
  std::size_t iterations = 3000;        // N_c
  std::size_t neighbor_count = 7;       // N_n
  double ik_bias = 0.6;                 // p_c, probability of IK propagation
  double steer_fraction = 0.5;          // delta
  double goal_bias = 0.1;               // classic biasing, baseline mode only
  double e_p = 0.008;                   // goal region bounds
  double e_phi = deg_to_rad(4.0);
  double angle_resolution = kDefaultAngleResolution;
  std::uint64_t seed = 0;
  std::size_t audit_every = 0;          // full-tree time audit cadence; 0 = off

  void validate() const {
    if (ik_bias < 0.0 || ik_bias > 1.0) throw std::invalid_argument("ik_bias must be in [0,1]");
    if (goal_bias < 0.0 || goal_bias > 1.0)
      throw std::invalid_argument("goal_bias must be in [0,1]");
    if (steer_fraction <= 0.0 || steer_fraction > 1.0)
      throw std::invalid_argument("steer_fraction must be in (0,1]");
  }
};

struct GoalSpec {
  PoseSE2 pose;
  std::optional<Configuration> q_goal;  // baseline biasing target, if known
};

struct IterationRecord {
  std::size_t iteration = 0;
  std::size_t tree_size = 0;
  double best_tau = kInfiniteTime;
};

struct PlanStats {
  std::vector<IterationRecord> trace;   // one record per iteration
  std::size_t tree_size = 0;
  std::size_t goal_nodes = 0;
  std::size_t ik_calls = 0;
  std::size_t ik_checked_nodes = 0;     // |N| at the end
  std::size_t rewires = 0;
  std::size_t first_solution_iteration = 0;  // 0 when no solution
  std::size_t audit_failures = 0;
  double best_tau = kInfiniteTime;
};

struct PlanResult {
  bool success = false;
  Path path;
  PlanStats stats;
};

using IkSolverFn = std::function<Configuration(const PoseSE2&, const Configuration&)>;

/// Root-to-node materialization.
inline Path tree_path(const Tree& tree, std::size_t leaf) {
  std::vector<std::size_t> chain;
  for (std::size_t cur = leaf; cur != kNoNode; cur = tree.node(cur).parent)
    chain.push_back(cur);
  std::reverse(chain.begin(), chain.end());
  Path path;
  path.waypoints.reserve(chain.size());
  path.cum_time.reserve(chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const TreeNode& v = tree.node(chain[i]);
    path.waypoints.push_back(v.q);
    path.cum_time.push_back(v.tau);
    if (i > 0) path.actions.push_back(v.action);
  }
  return path;
}

/// Cheapest goal node's root chain.
inline Path best_path(const Tree& tree, const std::vector<std::size_t>& goal_ids) {
  if (goal_ids.empty()) throw std::invalid_argument("best_path: empty goal set");
  std::size_t best = goal_ids.front();
  for (std::size_t id : goal_ids)
    if (tree.node(id).tau < tree.node(best).tau) best = id;
  return tree_path(tree, best);
}

/// Sampling-based planner over the actuator-time cost: RRT* expansion with
/// the motion convention's collision gate, stochastic IK propagation toward
/// the goal pose (probability ik_bias, once per node), arm-through-goal
/// detection with post-hoc actuator correction, and rewiring. With
/// ik_bias = 0 it degrades to the classic planner with plain goal biasing.
class Planner {
public:
  Planner(const Environment& env, const RobotModel& model, PlannerParams params)
      : env_(env), model_(model), params_(std::move(params)) {
    params_.validate();
  }

  PlanResult plan(const Configuration& q_init, const GoalSpec& goal, IkSolverFn ik) {
    if (!config_free(env_, model_, q_init))
      throw std::domain_error("plan: initial configuration is not collision-free");
    if (goal.q_goal) model_.require_feasible(*goal.q_goal);
    const bool use_ik = params_.ik_bias > 0.0;
    if (use_ik && !ik) throw std::invalid_argument("plan: ik_bias > 0 needs an IK solver");

    // baseline mode steers toward a goal configuration now and then
    std::optional<Configuration> q_goal = goal.q_goal;
    if (!use_ik && !q_goal) {
      const Configuration q_c = q_init;
      const NrParams nr{.e_p = params_.e_p, .e_phi = params_.e_phi};
      const IkNumericResult sol =
          ik_numeric(model_, goal.pose, q_c, 1000, derive_seed(params_.seed, 0x9e1), nr);
      if (sol.solution) q_goal = sol.solution;
    }

    Rng rng(params_.seed);
    Tree tree(q_init);
    std::vector<std::size_t> goal_ids;
    std::unordered_set<std::size_t> goal_set;   // G
    std::unordered_set<std::size_t> ik_checked; // N
    PlanResult result;
    PlanStats& stats = result.stats;
    stats.trace.reserve(params_.iterations);
    std::unordered_map<std::uint64_t, double> audit_taus;

    for (std::size_t it = 1; it <= params_.iterations; ++it) {
      Configuration q_rand;
      if (!use_ik && q_goal && rng.uniform01() < params_.goal_bias) {
        q_rand = *q_goal;
      } else {
        q_rand = sample_free(env_, model_, rng);
      }
      const std::size_t v_nearest = nearest(tree, model_, q_rand);

      TreeNode v_new;
      const double p = rng.uniform01();
      if (use_ik && p < params_.ik_bias && !goal_set.count(v_nearest) &&
          !ik_checked.count(v_nearest)) {
        ik_checked.insert(v_nearest);
        v_new = propagate_ik(tree, v_nearest, goal.pose, ik, model_);
        ++stats.ik_calls;
      } else {
        v_new = steer(tree, v_nearest, q_rand, params_.steer_fraction, model_);
      }

      if (motion_free(env_, model_, tree.node(v_nearest).q, v_new.q,
                      params_.angle_resolution)) {
        std::vector<std::size_t> neighbors =
            near(tree, model_, v_new.q, params_.neighbor_count, goal_set);
        connect(tree, neighbors, v_new, env_, model_, params_.angle_resolution);
        const std::size_t id = tree.add(std::move(v_new));

        if (const auto hit = on_goal(model_, goal.pose, tree.node(id).q, params_.e_p,
                                     params_.e_phi)) {
          const auto fixed = goal_fix(goal.pose, tree, tree.node(id), *hit, model_, env_,
                                      params_.angle_resolution);
          if (fixed) {
            TreeNode& v = tree.node(id);
            v.q = fixed->q;
            v.action = fixed->action;
            v.cost = fixed->cost;
            v.tau = fixed->tau;
            goal_ids.push_back(id);
            goal_set.insert(id);
            if (stats.first_solution_iteration == 0) stats.first_solution_iteration = it;
          } else {
            tree.pop_last();
          }
        } else {
          neighbors.erase(std::remove(neighbors.begin(), neighbors.end(),
                                      tree.node(id).parent),
                          neighbors.end());
          stats.rewires += rewire(tree, neighbors, id, env_, model_,
                                  params_.angle_resolution);
        }
      }

      double best = kInfiniteTime;
      for (std::size_t id : goal_ids) best = std::min(best, tree.node(id).tau);
      stats.trace.push_back({it, tree.size(), best});

      if (params_.audit_every > 0 && it % params_.audit_every == 0)
        stats.audit_failures += audit(tree, audit_taus);
    }

    stats.tree_size = tree.size();
    stats.goal_nodes = goal_ids.size();
    stats.ik_checked_nodes = ik_checked.size();
    if (!goal_ids.empty()) {
      result.path = best_path(tree, goal_ids);
      result.success = true;
      stats.best_tau = result.path.total_time();
    }
    return result;
  }

private:
  /// Re-derives every node's cumulative time down the tree (parents may have
  /// higher arena indices after rewiring, so walk children links) and checks
  /// that no surviving node got slower since the previous audit.
  std::size_t audit(const Tree& tree, std::unordered_map<std::uint64_t, double>& previous) const {
    std::size_t failures = 0;
    std::vector<double> recomputed(tree.size(), 0.0);
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
      const std::size_t id = stack.back();
      stack.pop_back();
      const TreeNode& v = tree.node(id);
      if (v.parent != kNoNode)
        recomputed[id] =
            recomputed[v.parent] + action_cost(model_, tree.node(v.parent).q, v.action);
      if (std::abs(v.tau - recomputed[id]) > 1e-9) ++failures;
      const auto it = previous.find(v.serial);
      if (it != previous.end() && v.tau > it->second + 1e-12) ++failures;
      for (std::size_t ch : v.children) stack.push_back(ch);
    }
    previous.clear();
    for (std::size_t i = 0; i < tree.size(); ++i)
      previous.emplace(tree.node(i).serial, tree.node(i).tau);
    return failures;
  }

  const Environment& env_;
  const RobotModel& model_;
  PlannerParams params_;
};

inline PlanResult plan(const Environment& env, const RobotModel& model,
                       const Configuration& q_init, const GoalSpec& goal, IkSolverFn ik,
                       const PlannerParams& params) {
  Planner planner(env, model, params);
  return planner.plan(q_init, goal, std::move(ik));
}

}  // namespace masr
