// End-to-end acceptance suite. Runs every gate in order, prints one verdict
// line per criterion, and exits non-zero if any fails.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "masr/bench.hpp"
#include "masr/dataset.hpp"
#include "masr/ik_numeric.hpp"
#include "masr/io.hpp"
#include "masr/kinematics.hpp"
#include "masr/mlp.hpp"
#include "masr/motion.hpp"
#include "masr/planner.hpp"
#include "masr/train.hpp"

using namespace masr;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

RobotModel bench_arm() {
  return RobotModel({0.2, 0.2, 0.2, 0.1, 0.1},
                    {deg_to_rad(50), deg_to_rad(50), deg_to_rad(50), deg_to_rad(50), deg_to_rad(50)},
                    0.1, 0.28, 0.04);
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), pattern, args...);
  return buf;
}

// Shared artifacts, built once and reused across criteria.
struct Context {
  RobotModel model = bench_arm();
  PoseDataset dataset;
  std::optional<MlpNetwork> net13;  // action-time regularizer
  std::optional<MlpNetwork> net12;  // joint-delta regularizer
  double train13_minutes = 0.0;

  struct SceneRun {
    bench::TrialScene scene;
    PlanResult biased;  // p_c = 0.6
  };
  std::vector<SceneRun> scene_runs;     // from criterion 8
  std::vector<PlanStats> stats_storage; // every planner run, for criterion 10

  const PoseDataset& desk_dataset() {
    if (dataset.poses.empty()) dataset = generate_dataset(model, 180, 160, 10, 7, 2000000);
    return dataset;
  }

  const MlpNetwork& model13() {
    if (!net13) {
      TrainHyper hyper;  // action-time reg, lambda 1e-3, lr 1e-4, batch 500
      hyper.epochs = 300;
      hyper.seed = 1;
      const auto t0 = std::chrono::steady_clock::now();
      net13 = train(model, desk_dataset(), hyper).net;
      train13_minutes =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
    }
    return *net13;
  }

  const MlpNetwork& model12() {
    if (!net12) {
      TrainHyper hyper;
      hyper.reg = RegKind::kJointDelta;
      hyper.lambda = 0.002;
      hyper.hidden = {70, 50, 30, 20};
      hyper.epochs = 300;
      hyper.seed = 1;
      net12 = train(model, desk_dataset(), hyper).net;
    }
    return *net12;
  }
};

// homogeneous-transform FK oracle (independent route)
PoseSE2 homogeneous_fk(const RobotModel& model, const Configuration& q) {
  const MaLocation loc = model.decompose_ma_position(q.d);
  auto rot = [](double a) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(0, 0) = std::cos(a);
    m(0, 1) = -std::sin(a);
    m(1, 0) = std::sin(a);
    m(1, 1) = std::cos(a);
    return m;
  };
  auto trans = [](double t) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(0, 2) = t;
    return m;
  };
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  for (std::size_t j = 0; j < loc.link; ++j)
    t = t * rot(q.theta[j]) * trans(model.link_lengths()[j]);
  t = t * rot(q.theta[loc.link]) * trans(loc.offset);
  return {t(0, 2), t(1, 2), std::atan2(t(1, 0), t(0, 0))};
}

// ---------------------------------------------------------------------------

Outcome criterion_fk_oracle(Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(42);
  double max_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Configuration q = ctx.model.sample_configuration(rng);
    const PoseSE2 a = forward_kinematics(ctx.model, q);
    const PoseSE2 b = homogeneous_fk(ctx.model, q);
    max_err = std::max({max_err, std::abs(a.x - b.x), std::abs(a.y - b.y),
                        std::abs(normalize_angle(a.phi - b.phi))});
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {max_err <= 1e-9 && secs < 1.0,
          fmt("1000 configurations, max error %.2e (gate 1e-9), %.2f s (gate 1)", max_err, secs)};
}

Outcome criterion_traverse(Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  // dyadic arm and samples: every value below is exact in double precision,
  // so the two routes must agree bit for bit
  const RobotModel dyadic({0.25, 0.1875, 0.25, 0.125, 0.125},
                          {0.875, 0.875, 0.875, 0.875, 0.875}, 0.125, 0.25, 0.0);
  Rng rng(2024);
  auto draw = [&rng](double lo, double hi) {
    return std::floor(rng.uniform(lo, hi) * 65536.0) / 65536.0;
  };
  std::size_t exact = 0;
  for (int i = 0; i < 10000; ++i) {
    Configuration q_from, q_to;
    for (double b : dyadic.joint_bounds()) {
      q_from.theta.push_back(draw(-b, b));
      q_to.theta.push_back(draw(-b, b));
    }
    q_from.d = draw(0.0, dyadic.total_length());
    q_to.d = draw(0.0, dyadic.total_length());
    Action a = action_between(q_to, q_from);
    for (std::size_t j = 0; j < a.dtheta.size(); ++j)
      if (rng.uniform01() < 0.4) a.dtheta[j] = 0.0;
    double moved = 0.0;
    for (const auto& s : expand_action(dyadic, q_from, a))
      if (s.kind == MotionStep::Kind::Move) moved += std::abs(s.to_d - s.from_d);
    if (moved == traverse_length(dyadic, q_from, a)) ++exact;
  }

  // worked instance on the benchmark arm
  Configuration q{{0, 0, 0, 0, 0}, 0.5};
  Action a{{0.3, 0.25, 0, 0, 0}, -0.3};
  const double instance = traverse_length(ctx.model, q, a);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {exact == 10000 && std::abs(instance - 0.7) < 1e-12 && secs < 5.0,
          fmt("%zu/10000 bitwise equal, worked instance %.15f m (gate 0.7), %.2f s (gate 5)",
              exact, instance, secs)};
}

Outcome criterion_gradients(Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const RobotModel& model = ctx.model;
  Rng rng(33);
  const double h = 1e-6;
  double worst_loss = 0.0, worst_jac = 0.0;

  TrainHyper hyper;
  hyper.reg = RegKind::kActionTime;
  hyper.lambda = 0.01;
  int checked = 0;
  while (checked < 100) {
    const Configuration q_c = model.sample_configuration(rng);
    const Configuration q_t = model.sample_configuration(rng);
    const PoseSE2 x_d = forward_kinematics(model, model.sample_configuration(rng));
    bool ok = q_t.d > 1e-3 && q_t.d < model.total_length() - 1e-3;
    for (std::size_t j = 0; j < model.joint_count(); ++j) {
      if (std::abs(q_t.theta[j] - q_c.theta[j]) < 1e-3) ok = false;
      if (std::abs(std::abs(q_t.theta[j]) - model.joint_bounds()[j]) < 2 * h) ok = false;
      if (std::abs(q_t.d - model.joint_anchor(j)) < 1e-3) ok = false;
    }
    if (std::abs(normalize_angle(forward_kinematics(model, q_t).phi - x_d.phi)) > 3.0) ok = false;
    if (!ok) continue;
    ++checked;
    const IkLoss loss = ik_loss(model, q_c, x_d, q_t, hyper);
    for (std::size_t c = 0; c <= model.joint_count(); ++c) {
      Configuration lo = q_t, hi = q_t;
      if (c < model.joint_count()) {
        lo.theta[c] -= h;
        hi.theta[c] += h;
      } else {
        lo.d -= h;
        hi.d += h;
      }
      const double fd = (ik_loss(model, q_c, x_d, hi, hyper).value -
                         ik_loss(model, q_c, x_d, lo, hyper).value) /
                        (2 * h);
      const double a = loss.grad(static_cast<Eigen::Index>(c));
      worst_loss = std::max(worst_loss,
                            std::abs(a - fd) / std::max({1.0, std::abs(a), std::abs(fd)}));
    }
  }

  checked = 0;
  while (checked < 100) {
    const Configuration q = model.sample_configuration(rng);
    bool ok = q.d > 1e-3 && q.d < model.total_length() - 1e-3;
    for (std::size_t j = 0; j < model.joint_count(); ++j) {
      if (std::abs(q.d - model.joint_anchor(j)) < 1e-3) ok = false;
      if (std::abs(std::abs(q.theta[j]) - model.joint_bounds()[j]) < 2 * h) ok = false;
    }
    if (!ok) continue;
    ++checked;
    const Eigen::Matrix3Xd jac = fk_jacobian(model, q);
    for (std::size_t c = 0; c <= model.joint_count(); ++c) {
      Configuration lo = q, hi = q;
      if (c < model.joint_count()) {
        lo.theta[c] -= h;
        hi.theta[c] += h;
      } else {
        lo.d -= h;
        hi.d += h;
      }
      const PoseSE2 xl = forward_kinematics(model, lo);
      const PoseSE2 xh = forward_kinematics(model, hi);
      const double fd[3] = {(xh.x - xl.x) / (2 * h), (xh.y - xl.y) / (2 * h),
                            normalize_angle(xh.phi - xl.phi) / (2 * h)};
      for (int r = 0; r < 3; ++r) {
        const double a = jac(r, static_cast<Eigen::Index>(c));
        worst_jac = std::max(worst_jac,
                             std::abs(a - fd[r]) / std::max({1.0, std::abs(a), std::abs(fd[r])}));
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst_loss <= 1e-4 && worst_jac <= 1e-5 && secs < 10.0,
          fmt("loss-gradient max rel err %.2e (gate 1e-4), jacobian %.2e (gate 1e-5), %.2f s",
              worst_loss, worst_jac, secs)};
}

Outcome criterion_regularizer_oracle(Context& ctx) {
  // 5R worked example: sum of |dtheta_i| |d_c - r_i| terms is
  // (1.5 + 1.0 + 1.5 + 4.5 + 4.0) a l = 12.5 a l
  const RobotModel& model = ctx.model;  // l = 0.2 with l4 = l5 = 0.1
  const double l = 0.2, alpha = 0.1;
  const Configuration q_c{{0, 0, 0, 0, 0}, 1.5 * l};
  const Configuration q_t{{alpha, 2 * alpha, -3 * alpha, -3 * alpha, 2 * alpha}, 2.5 * l};
  double oracle = 0.0;
  for (std::size_t i = 0; i < 5; ++i)
    oracle += std::abs(q_c.theta[i] - q_t.theta[i]) / model.joint_speed() *
              std::abs(q_c.d - model.joint_anchor(i)) / model.ma_speed();
  const double expected = 12.5 * (l / model.ma_speed()) * (alpha / model.joint_speed());
  const double implemented = regularizer_value(model, q_c, q_t, RegKind::kActionTime);
  const bool pass = std::abs(oracle - expected) <= 1e-12 * expected &&
                    std::abs(implemented - expected) <= 1e-12 * expected;
  return {pass, fmt("per-joint oracle %.6f, implementation %.6f, closed form 12.5 t_l t_th = %.6f",
                    oracle, implemented, expected)};
}

Outcome criterion_desk_ik_nn(Context& ctx) {
  const MlpNetwork& net = ctx.model13();
  const RobotModel& model = ctx.model;
  Rng rng(99);
  int hits = 0;
  double dp_sum = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Configuration q_c = model.sample_configuration(rng);
    const PoseSE2 x_d = forward_kinematics(model, model.sample_configuration(rng));
    const Configuration q = ik_solve(net, x_d, q_c);
    const PoseSE2 got = forward_kinematics(model, q);
    const double dp = std::hypot(got.x - x_d.x, got.y - x_d.y);
    const double dphi = std::abs(normalize_angle(got.phi - x_d.phi));
    dp_sum += dp;
    if (dp <= 0.016 && dphi <= deg_to_rad(8.0)) ++hits;
  }
  const double success = 100.0 * hits / 1000.0;
  const double mean_dp_mm = dp_sum;
  const bool pass = success >= 60.0 && mean_dp_mm <= 12.0 && ctx.train13_minutes <= 30.0;
  return {pass, fmt("dataset N=%zu, success %.1f%% at 16 mm / 8 deg (gate 60), mean dp %.2f mm "
                    "(gate 12), training %.1f min (gate 30)",
                    ctx.desk_dataset().size(), success, mean_dp_mm, ctx.train13_minutes)};
}

Outcome criterion_regularizer_ordering(Context& ctx) {
  const MlpNetwork& m13 = ctx.model13();
  const MlpNetwork& m12 = ctx.model12();
  const RobotModel& model = ctx.model;
  Rng rng(1234);
  double reg13 = 0.0, reg12 = 0.0;
  const int queries = 1000;
  for (int i = 0; i < queries; ++i) {
    const Configuration q_c = model.sample_configuration(rng);
    const PoseSE2 x_d = forward_kinematics(model, model.sample_configuration(rng));
    reg13 += regularizer_value(model, q_c, ik_solve(m13, x_d, q_c), RegKind::kActionTime);
    reg12 += regularizer_value(model, q_c, ik_solve(m12, x_d, q_c), RegKind::kActionTime);
  }
  reg13 /= queries;
  reg12 /= queries;
  const bool pass = reg13 < reg12 || reg13 <= 1.05 * reg12;
  return {pass, fmt("mean action-time figure: action-time-trained %.3f vs joint-delta-trained "
                    "%.3f over %d queries (gate: former <= latter within 5%%)",
                    reg13, reg12, queries)};
}

Outcome criterion_numeric_ik(Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const RobotModel& model = ctx.model;
  Rng rng(7);
  int hits = 0;
  bool every_success_valid = true;
  for (int i = 0; i < 200; ++i) {
    const PoseSE2 x_d = forward_kinematics(model, model.sample_configuration(rng));
    const Configuration q_c = model.sample_configuration(rng);
    const IkNumericResult res =
        ik_numeric(model, x_d, q_c, 1000, derive_seed(555, static_cast<std::uint64_t>(i)));
    if (!res.solution) continue;
    ++hits;
    const PoseSE2 got = forward_kinematics(model, *res.solution);
    const double dp = std::hypot(got.x - x_d.x, got.y - x_d.y);
    const double dphi = std::abs(normalize_angle(got.phi - x_d.phi));
    if (dp > 0.008 || dphi > deg_to_rad(4.0) || !model.feasible(*res.solution, 0.0))
      every_success_valid = false;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double success = 100.0 * hits / 200.0;
  return {success >= 90.0 && every_success_valid && secs <= 300.0,
          fmt("m=1000: success %.1f%% (gate 90), all successes within 8 mm / 4 deg and "
              "feasible: %s, %.1f s (gate 300)",
              success, every_success_valid ? "yes" : "NO", secs)};
}

std::string serialize_run(const PlanResult& res) {
  std::ostringstream out;
  out << res.success << '\n';
  if (res.success) out << io::path_to_json(res.path).dump();
  for (const auto& rec : res.stats.trace)
    out << rec.iteration << ' ' << rec.tree_size << ' ' << io::g17(rec.best_tau) << '\n';
  return out.str();
}

Outcome criterion_planner_soundness(Context& ctx) {
  const RobotModel& model = ctx.model;
  const MlpNetwork& net = ctx.model13();
  const IkSolverFn ik = [&net](const PoseSE2& x, const Configuration& q) {
    return ik_solve(net, x, q);
  };
  std::size_t solved = 0;
  bool valid = true, deterministic = true;
  double worst_resum = 0.0;
  const std::vector<PoseSE2>& goals = ctx.desk_dataset().poses;
  for (std::size_t trial = 0; trial < 50; ++trial) {
    const bench::TrialScene scene = bench::make_trial_scene(model, 31337, trial, 4, 0.3, goals);
    PlannerParams params;
    params.iterations = 1000;
    params.ik_bias = 0.6;
    params.seed = derive_seed(31337, trial);
    params.audit_every = 500;
    const PlanResult res = plan(scene.env, model, scene.q_init, {scene.x_goal, std::nullopt},
                                ik, params);
    const PlanResult rerun = plan(scene.env, model, scene.q_init, {scene.x_goal, std::nullopt},
                                  ik, params);
    if (serialize_run(res) != serialize_run(rerun)) deterministic = false;

    if (res.success) {
      ++solved;
      for (const auto& q : res.path.waypoints)
        if (!config_free(scene.env, model, q)) valid = false;
      for (std::size_t k = 0; k + 1 < res.path.waypoints.size(); ++k)
        if (!motion_free(scene.env, model, res.path.waypoints[k], res.path.waypoints[k + 1]))
          valid = false;
      worst_resum = std::max(worst_resum,
                             std::abs(path_cost(model, res.path) - res.path.total_time()));
      if (worst_resum > 1e-9) valid = false;
    }
    ctx.stats_storage.push_back(res.stats);
    ctx.scene_runs.push_back({scene, res});
  }
  return {valid && deterministic && solved > 0,
          fmt("%zu/50 solved; re-validation %s; worst time re-sum %.1e (gate 1e-9); "
              "same-seed reruns byte-identical: %s",
              solved, valid ? "clean" : "FAILED", worst_resum, deterministic ? "yes" : "NO")};
}

Outcome criterion_ik_biasing(Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const RobotModel& model = ctx.model;
  const MlpNetwork& net = ctx.model13();
  const IkSolverFn ik = [&net](const PoseSE2& x, const Configuration& q) {
    return ik_solve(net, x, q);
  };

  // part 1: the criterion-8 scenes, baseline vs the recorded biased runs
  std::size_t biased = 0, baseline = 0;
  for (const auto& run : ctx.scene_runs) {
    if (run.biased.success) ++biased;
    PlannerParams params;
    params.iterations = 1000;
    params.ik_bias = 0.0;
    params.seed = derive_seed(31337, static_cast<std::uint64_t>(&run - ctx.scene_runs.data()));
    params.audit_every = 500;
    const PlanResult res = plan(run.scene.env, model, run.scene.q_init,
                                {run.scene.x_goal, std::nullopt}, nullptr, params);
    if (res.success) ++baseline;
    ctx.stats_storage.push_back(res.stats);
  }

  // part 2: empty workspaces, generous budget, biased planner must always win
  std::size_t empty_hits = 0;
  const Environment empty({}, model.total_length());
  Configuration straight;
  straight.theta.assign(model.joint_count(), 0.0);
  straight.d = 0.0;
  const std::vector<PoseSE2>& goals = ctx.desk_dataset().poses;
  for (std::size_t trial = 0; trial < 50; ++trial) {
    Rng rng(derive_seed(909, trial));
    const PoseSE2 goal = goals[rng.uniform_int(0, goals.size() - 1)];
    PlannerParams params;
    params.iterations = 3000;
    params.ik_bias = 0.6;
    params.seed = derive_seed(909, trial);
    params.audit_every = 500;
    const PlanResult res = plan(empty, model, straight, {goal, std::nullopt}, ik, params);
    if (res.success) ++empty_hits;
    ctx.stats_storage.push_back(res.stats);
  }

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {biased >= baseline && empty_hits == 50 && secs <= 1200.0,
          fmt("50 obstacle scenes at 1000 iterations: biased %zu vs baseline %zu (gate >=); "
              "empty scenes at 3000 iterations: %zu/50 (gate 50); %.0f s (gate 1200)",
              biased, baseline, empty_hits, secs)};
}

Outcome criterion_anytime_monotone(Context& ctx) {
  std::size_t audits_failed = 0, monotone_violations = 0, traces = 0;
  for (const PlanStats& stats : ctx.stats_storage) {
    ++traces;
    audits_failed += stats.audit_failures;
    double prev = kInfiniteTime;
    for (const auto& rec : stats.trace) {
      if (rec.best_tau > prev + 1e-12) ++monotone_violations;
      prev = rec.best_tau;
    }
  }
  return {audits_failed == 0 && monotone_violations == 0 && traces >= 150,
          fmt("%zu planner traces: %zu monotonicity violations, %zu audit failures "
              "(tree re-sum + never-slower, every 500 iterations)",
              traces, monotone_violations, audits_failed)};
}

}  // namespace

int main() {
  Context ctx;
  struct Entry {
    int number;
    const char* name;
    std::function<Outcome(Context&)> fn;
  };
  const std::vector<Entry> entries = {
      {1, "fk-oracle-equivalence", criterion_fk_oracle},
      {2, "traverse-length-equivalence", criterion_traverse},
      {3, "gradient-checks", criterion_gradients},
      {4, "regularizer-oracle", criterion_regularizer_oracle},
      {5, "desk-scale-ik-nn", criterion_desk_ik_nn},
      {6, "regularizer-ordering", criterion_regularizer_ordering},
      {7, "numeric-ik", criterion_numeric_ik},
      {8, "planner-soundness", criterion_planner_soundness},
      {9, "ik-biasing-benefit", criterion_ik_biasing},
      {10, "anytime-monotonicity", criterion_anytime_monotone},
  };

  int failures = 0;
  for (const auto& entry : entries) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = entry.fn(ctx);
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d %-28s %s [%.1f s]\n", outcome.pass ? "PASS" : "FAIL", entry.number,
                entry.name, outcome.detail.c_str(), secs);
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  if (failures == 0) {
    std::printf("acceptance: all %zu criteria passed\n", entries.size());
  } else {
    std::printf("acceptance: %d of %zu criteria FAILED\n", failures, entries.size());
  }
  return failures == 0 ? 0 : 1;
}
