#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "masr/bench.hpp"
#include "masr/dataset.hpp"
#include "masr/ik_numeric.hpp"
#include "masr/io.hpp"
#include "masr/mlp.hpp"
#include "masr/planner.hpp"
#include "masr/svg.hpp"
#include "masr/train.hpp"

namespace masr::cli {

namespace detail {

inline std::vector<std::size_t> parse_size_list(const std::string& csv) {
  std::vector<std::size_t> out;
  std::istringstream in(csv);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(static_cast<std::size_t>(std::stoull(tok)));
  }
  if (out.empty()) throw CLI::ValidationError("expected a comma-separated list of integers");
  return out;
}

inline std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::istringstream in(csv);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  if (out.empty()) throw CLI::ValidationError("expected a comma-separated list of numbers");
  return out;
}

struct IkEvalRow {
  std::string method;
  double mean_dp_mm = 0.0;
  double mean_dphi_deg = 0.0;
  double success_pct = 0.0;
  double mean_reg13 = 0.0;       // action-time regularizer of the answer vs q_c
  double mean_cost_s = 0.0;      // full action time of executing the answer
  double mean_runtime_ms = 0.0;
};

inline std::string ik_eval_table(const std::vector<IkEvalRow>& rows, std::size_t trials,
                                 std::uint64_t seed, double e_p, double e_phi) {
  std::ostringstream out;
  out << "masr-ik-eval 1\n";
  out << "trials " << trials << " seed " << seed << " e_p_mm " << io::g17(e_p * 1000.0)
      << " e_phi_deg " << io::g17(rad_to_deg(e_phi)) << '\n';
  out << "method mean_dp_mm mean_dphi_deg success_pct mean_action_reg13 mean_action_cost_s "
         "mean_runtime_ms\n";
  for (const auto& r : rows)
    out << r.method << ' ' << io::g17(r.mean_dp_mm) << ' ' << io::g17(r.mean_dphi_deg) << ' '
        << io::g17(r.success_pct) << ' ' << io::g17(r.mean_reg13) << ' '
        << io::g17(r.mean_cost_s) << ' ' << io::g17(r.mean_runtime_ms) << '\n';
  return out.str();
}

}  // namespace detail

/// Full inverse-kinematics evaluation protocol: random start configurations
/// against reachable target poses, learned solver vs the multi-restart
/// numeric baseline.
inline detail::IkEvalRow eval_ik_nn(const RobotModel& model, const MlpNetwork& net,
                                    std::size_t trials, std::uint64_t seed, double e_p,
                                    double e_phi) {
  detail::IkEvalRow row;
  row.method = "ik-nn";
  Rng rng(seed);
  std::size_t hits = 0;
  double runtime = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    const Configuration q_c = model.sample_configuration(rng);
    const PoseSE2 x_d = forward_kinematics(model, model.sample_configuration(rng));
    const auto t0 = std::chrono::steady_clock::now();
    const Configuration q = ik_solve(net, x_d, q_c);
    runtime += std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - t0)
                   .count();
    const PoseSE2 reached = forward_kinematics(model, q);
    const double dp = std::hypot(reached.x - x_d.x, reached.y - x_d.y);
    const double dphi = std::abs(normalize_angle(reached.phi - x_d.phi));
    row.mean_dp_mm += dp * 1000.0;
    row.mean_dphi_deg += rad_to_deg(dphi);
    row.mean_reg13 += regularizer_value(model, q_c, q, RegKind::kActionTime);
    row.mean_cost_s += action_cost(model, q_c, action_between(q, q_c));
    if (dp <= e_p && dphi <= e_phi) ++hits;
  }
  const double n = static_cast<double>(trials);
  row.mean_dp_mm /= n;
  row.mean_dphi_deg /= n;
  row.mean_reg13 /= n;
  row.mean_cost_s /= n;
  row.mean_runtime_ms = runtime / n;
  row.success_pct = 100.0 * static_cast<double>(hits) / n;
  return row;
}

inline detail::IkEvalRow eval_ik_numeric(const RobotModel& model, std::size_t m,
                                         std::size_t trials, std::uint64_t seed, double e_p,
                                         double e_phi) {
  detail::IkEvalRow row;
  row.method = "nr-m" + std::to_string(m);
  Rng rng(seed);
  std::size_t hits = 0;
  double runtime = 0.0;
  NrParams params;
  params.e_p = e_p;
  params.e_phi = e_phi;
  for (std::size_t i = 0; i < trials; ++i) {
    const Configuration q_c = model.sample_configuration(rng);
    const PoseSE2 x_d = forward_kinematics(model, model.sample_configuration(rng));
    const auto t0 = std::chrono::steady_clock::now();
    const IkNumericResult res =
        ik_numeric(model, x_d, q_c, m, derive_seed(seed, i), params);
    runtime += std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - t0)
                   .count();
    if (res.solution) {
      ++hits;
      row.mean_dp_mm += res.dp * 1000.0;
      row.mean_dphi_deg += rad_to_deg(res.dphi);
      row.mean_reg13 += res.action_time;
      row.mean_cost_s += action_cost(model, q_c, action_between(*res.solution, q_c));
    }
  }
  // errors and times over the solved queries; success over all
  const double solved = hits ? static_cast<double>(hits) : 1.0;
  row.mean_dp_mm /= solved;
  row.mean_dphi_deg /= solved;
  row.mean_reg13 /= solved;
  row.mean_cost_s /= solved;
  row.mean_runtime_ms = runtime / static_cast<double>(trials);
  row.success_pct = 100.0 * static_cast<double>(hits) / static_cast<double>(trials);
  return row;
}

inline int run(std::vector<std::string> args) {
  CLI::App app{"Minimally actuated serial arm: kinematics, learned IK, planning"};
  app.require_subcommand(1);

  // --- gen-data ---------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "generate a pose dataset for IK training");
  std::string gen_env, gen_out;
  std::size_t gen_gx = 180, gen_gy = 160, gen_rho = 10;
  std::uint64_t gen_seed = 0, gen_max = 2000000;
  gen->add_option("--env", gen_env, "environment file (robot block)")->required();
  gen->add_option("--out", gen_out, "dataset output file")->required();
  gen->add_option("--grid-x", gen_gx, "occupancy grid cells across x");
  gen->add_option("--grid-y", gen_gy, "occupancy grid cells across y");
  gen->add_option("--rho", gen_rho, "max enclosed vacancy size in cells");
  gen->add_option("--seed", gen_seed, "random seed");
  gen->add_option("--max-samples", gen_max, "draw budget");

  // --- train ------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "train the IK network on a dataset");
  std::string tr_env, tr_data, tr_out, tr_log, tr_reg = "action-time",
                                               tr_hidden = "120,100,50,30";
  double tr_lambda = 0.001, tr_lr = 1e-4;
  std::size_t tr_batch = 500, tr_epochs = 300;
  std::uint64_t tr_seed = 0;
  tr->add_option("--env", tr_env, "environment file (robot block)")->required();
  tr->add_option("--data", tr_data, "dataset file")->required();
  tr->add_option("--out", tr_out, "model output file")->required();
  tr->add_option("--log", tr_log, "training log output file");
  tr->add_option("--reg", tr_reg, "regularizer: action-time | joint-delta")
      ->check(CLI::IsMember({"action-time", "joint-delta"}));
  tr->add_option("--lambda", tr_lambda, "regularization weight");
  tr->add_option("--hidden", tr_hidden, "hidden layer sizes, comma separated");
  tr->add_option("--lr", tr_lr, "learning rate");
  tr->add_option("--batch", tr_batch, "batch size");
  tr->add_option("--epochs", tr_epochs, "training epochs");
  tr->add_option("--seed", tr_seed, "random seed");

  // --- ik-eval ----------------------------------------------------------
  auto* ev = app.add_subcommand("ik-eval", "compare the learned solver with the numeric one");
  std::string ev_env, ev_model, ev_out;
  std::size_t ev_trials = 5000, ev_m = 1000;
  std::uint64_t ev_seed = 0;
  bool ev_skip_numeric = false;
  ev->add_option("--env", ev_env, "environment file (robot + tolerances)")->required();
  ev->add_option("--model", ev_model, "trained model file")->required();
  ev->add_option("--trials", ev_trials, "number of random queries");
  ev->add_option("--m", ev_m, "numeric solver restarts per query");
  ev->add_option("--seed", ev_seed, "random seed");
  ev->add_option("--out", ev_out, "also write the table to this file");
  ev->add_flag("--skip-numeric", ev_skip_numeric, "evaluate only the network");

  // --- plan -------------------------------------------------------------
  auto* pl = app.add_subcommand("plan", "plan a path in an environment");
  std::string pl_env, pl_model, pl_out, pl_svg;
  double pl_pc = 0.6, pl_delta = 0.5;
  std::size_t pl_nc = 3000, pl_nn = 7;
  std::uint64_t pl_seed = 0;
  pl->add_option("--env", pl_env, "environment file")->required();
  pl->add_option("--model", pl_model, "trained model file (needed when --pc > 0)");
  pl->add_option("--pc", pl_pc, "IK propagation probability (0 = baseline planner)");
  pl->add_option("--nc", pl_nc, "iteration budget");
  pl->add_option("--nn", pl_nn, "neighbor count");
  pl->add_option("--delta", pl_delta, "steer fraction");
  pl->add_option("--seed", pl_seed, "random seed");
  pl->add_option("--out", pl_out, "path output file")->required();
  pl->add_option("--svg", pl_svg, "also render the result to this SVG file");

  // --- bench ------------------------------------------------------------
  auto* be = app.add_subcommand("bench", "run the planning benchmark suite");
  std::string be_env, be_model, be_out, be_pc = "0,0.2,0.6,1", be_envs;
  std::size_t be_trials = 50, be_nc = 3000, be_nn = 7, be_threads = 1, be_maxobs = 4;
  double be_coverage = 0.3;
  std::uint64_t be_seed = 0;
  bool be_timings = false;
  be->add_option("--env", be_env, "environment file (robot + tolerances)")->required();
  be->add_option("--model", be_model, "trained model file (needed when any pc > 0)");
  be->add_option("--out", be_out, "report output file")->required();
  be->add_option("--trials", be_trials, "number of trials");
  be->add_option("--pc", be_pc, "comma-separated IK propagation probabilities");
  be->add_option("--nc", be_nc, "iteration budget per trial");
  be->add_option("--nn", be_nn, "neighbor count");
  be->add_option("--seed", be_seed, "suite seed");
  be->add_option("--threads", be_threads, "worker threads (results are unaffected)");
  be->add_option("--max-obstacles", be_maxobs, "random scene obstacle cap");
  be->add_option("--coverage", be_coverage, "random scene coverage cap");
  be->add_option("--envs", be_envs, "comma-separated scene files instead of random scenes");
  be->add_flag("--timings", be_timings, "record wall times (report bytes become run-dependent)");

  // --- render -----------------------------------------------------------
  auto* re = app.add_subcommand("render", "render an environment (and a path) to SVG");
  std::string re_env, re_path, re_out;
  std::size_t re_waypoints = 8;
  re->add_option("--env", re_env, "environment file")->required();
  re->add_option("--path", re_path, "path file to draw");
  re->add_option("--out", re_out, "SVG output file")->required();
  re->add_option("--waypoints", re_waypoints, "max arm snapshots drawn from the path");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: validation: " << e.what() << '\n';
    return 1;
  }

  try {
    if (gen->parsed()) {
      const io::EnvironmentFile file = io::load_environment(gen_env);
      const PoseDataset data =
          generate_dataset(file.robot, gen_gx, gen_gy, gen_rho, gen_seed, gen_max);
      io::save_dataset(gen_out, data);
      std::cout << "dataset: " << data.size() << " poses from " << data.draws
                << " draws, density " << (data.density_reached ? "reached" : "NOT reached")
                << ", written to " << gen_out << '\n';
      return 0;
    }

    if (tr->parsed()) {
      const io::EnvironmentFile file = io::load_environment(tr_env);
      const PoseDataset data = io::load_dataset(tr_data);
      TrainHyper hyper;
      hyper.reg = tr_reg == "action-time" ? RegKind::kActionTime : RegKind::kJointDelta;
      hyper.lambda = tr_lambda;
      hyper.learning_rate = tr_lr;
      hyper.batch_size = tr_batch;
      hyper.epochs = tr_epochs;
      hyper.seed = tr_seed;
      hyper.hidden = detail::parse_size_list(tr_hidden);
      const TrainResult result = train(file.robot, data, hyper);
      io::save_network(tr_out, result.net);
      if (!tr_log.empty()) io::save_training_log(tr_log, result.log);
      std::cout << "trained " << hyper.epochs << " epochs on " << data.size()
                << " poses; final mean loss " << io::g17(result.log.back().mean_loss)
                << ", mean dp " << io::g17(result.log.back().mean_dp_mm) << " mm\n";
      return 0;
    }

    if (ev->parsed()) {
      const io::EnvironmentFile file = io::load_environment(ev_env);
      const MlpNetwork net = io::load_network(ev_model);
      io::require_matching_robot(net, file.robot);
      std::vector<detail::IkEvalRow> rows;
      rows.push_back(eval_ik_nn(file.robot, net, ev_trials, ev_seed, file.e_p, file.e_phi));
      if (!ev_skip_numeric)
        rows.push_back(
            eval_ik_numeric(file.robot, ev_m, ev_trials, ev_seed, file.e_p, file.e_phi));
      const std::string table =
          detail::ik_eval_table(rows, ev_trials, ev_seed, file.e_p, file.e_phi);
      std::cout << table;
      if (!ev_out.empty()) io::write_text_file(ev_out, table);
      return 0;
    }

    if (pl->parsed()) {
      const io::EnvironmentFile file = io::load_environment(pl_env);
      PlannerParams params;
      params.iterations = pl_nc;
      params.neighbor_count = pl_nn;
      params.ik_bias = pl_pc;
      params.steer_fraction = pl_delta;
      params.e_p = file.e_p;
      params.e_phi = file.e_phi;
      params.seed = pl_seed;

      IkSolverFn ik;
      MlpNetwork net;
      if (pl_pc > 0.0) {
        if (pl_model.empty())
          throw std::invalid_argument("plan: --pc > 0 requires --model");
        net = io::load_network(pl_model);
        io::require_matching_robot(net, file.robot);
        ik = [&net](const PoseSE2& x, const Configuration& q) { return ik_solve(net, x, q); };
      }

      const PlanResult res = plan(file.env, file.robot, file.start,
                                  {file.goal_pose, file.goal_config}, ik, params);
      if (!res.success) {
        std::cerr << "error: planning: no path found in " << pl_nc << " iterations (tree "
                  << res.stats.tree_size << " nodes)\n";
        return 2;
      }
      io::save_path(pl_out, res.path);
      if (!pl_svg.empty())
        io::write_text_file(pl_svg,
                            svg::render(file.env, file.robot, res.path.waypoints,
                                        svg::GoalMarker{file.goal_pose, file.e_p}));
      std::cout << "path: " << res.path.steps() << " actions, total time "
                << io::g17(res.path.total_time()) << " s, first solution at iteration "
                << res.stats.first_solution_iteration << ", tree " << res.stats.tree_size
                << " nodes\n";
      return 0;
    }

    if (be->parsed()) {
      const io::EnvironmentFile file = io::load_environment(be_env);
      bench::BenchParams params;
      params.trials = be_trials;
      params.pc_values = detail::parse_double_list(be_pc);
      params.iterations = be_nc;
      params.neighbor_count = be_nn;
      params.seed = be_seed;
      params.threads = be_threads;
      params.max_obstacles = be_maxobs;
      params.max_coverage = be_coverage;
      params.record_timings = be_timings;
      if (!be_envs.empty()) {
        std::istringstream in(be_envs);
        std::string tok;
        while (std::getline(in, tok, ','))
          if (!tok.empty()) params.env_files.push_back(tok);
      }

      MlpNetwork net;
      const MlpNetwork* net_ptr = nullptr;
      bool needs_net = false;
      for (double pc : params.pc_values) needs_net = needs_net || pc > 0.0;
      if (needs_net) {
        if (be_model.empty())
          throw std::invalid_argument("bench: pc > 0 requires --model");
        net = io::load_network(be_model);
        io::require_matching_robot(net, file.robot);
        net_ptr = &net;
      }

      const bench::BenchReport report = bench::bench_suite(file.robot, net_ptr, params);
      bench::save_report(be_out, report);
      std::size_t solved = 0;
      for (const auto& row : report.rows) solved += row.success ? 1 : 0;
      std::cout << "bench: " << report.rows.size() << " runs, " << solved << " solved, "
                << report.unsolvable_suspect.size()
                << " unsolvable-suspect trials, report written to " << be_out << '\n';
      return 0;
    }

    if (re->parsed()) {
      const io::EnvironmentFile file = io::load_environment(re_env);
      std::vector<Configuration> waypoints{file.start};
      if (!re_path.empty()) {
        const Path path = io::load_path(re_path);
        waypoints = path.waypoints;
        if (re_waypoints >= 2 && waypoints.size() > re_waypoints) {
          std::vector<Configuration> picked;
          for (std::size_t i = 0; i < re_waypoints; ++i) {
            const std::size_t idx =
                i * (waypoints.size() - 1) / (re_waypoints - 1);
            picked.push_back(waypoints[idx]);
          }
          waypoints = std::move(picked);
        }
      }
      io::write_text_file(re_out,
                          svg::render(file.env, file.robot, waypoints,
                                      svg::GoalMarker{file.goal_pose, file.e_p}));
      std::cout << "rendered " << waypoints.size() << " arm snapshots to " << re_out << '\n';
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: validation: " << e.what() << '\n';
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "error: validation: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args;
  args.reserve(static_cast<std::size_t>(argc));
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(std::move(args));
}

}  // namespace masr::cli
