#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "masr/environment.hpp"
#include "masr/io.hpp"
#include "masr/mlp.hpp"
#include "masr/planner.hpp"
#include "masr/rng.hpp"

namespace masr::bench {

struct BenchParams {
  std::size_t trials = 50;
  std::vector<double> pc_values = {0.0, 0.2, 0.6, 1.0};
  std::size_t iterations = 3000;     // N_c ceiling; curves sweep up to it
  std::size_t neighbor_count = 7;
  std::uint64_t seed = 0;
  std::size_t max_obstacles = 4;
  double max_coverage = 0.3;
  std::size_t threads = 1;
  bool record_timings = false;       // wall times are left out of reports by
                                     // default so identical suites produce
                                     // identical bytes
  std::vector<std::string> env_files;  // when set, trials cycle these scenes
};

struct TrialResult {
  std::size_t trial = 0;
  double pc = 0.0;
  std::uint64_t env_seed = 0;
  bool success = false;
  double final_tau = 0.0;
  std::size_t first_iteration = 0;  // 0 when unsolved
  double wall_ms = 0.0;
  // (iteration, tau) at the first solution and at every improvement
  std::vector<std::pair<std::size_t, double>> improvements;
};

struct SuccessCurve {
  double pc = 0.0;
  std::vector<std::size_t> iterations;
  std::vector<double> success_rate;       // solved at all by iteration i
  std::vector<double> below_15th;         // normalized best cost <= 0.15
  std::vector<double> below_25th;         // normalized best cost <= 0.25
};

struct BenchReport {
  BenchParams params;
  std::vector<TrialResult> rows;
  // derived (recomputable from rows)
  double norm_min = 0.0;
  double norm_max = 0.0;
  std::vector<SuccessCurve> curves;
  std::vector<std::size_t> unsolvable_suspect;  // failed under every pc
};

namespace detail {

inline std::vector<std::size_t> curve_checkpoints(std::size_t iterations) {
  std::vector<std::size_t> pts;
  const std::size_t step = std::max<std::size_t>(1, iterations / 60);
  for (std::size_t i = step; i < iterations; i += step) pts.push_back(i);
  pts.push_back(iterations);
  return pts;
}

/// Best tau a trial had discovered by the given iteration, if any.
inline std::optional<double> best_by(const TrialResult& row, std::size_t iteration) {
  std::optional<double> best;
  for (const auto& [it, tau] : row.improvements) {
    if (it > iteration) break;
    best = tau;
  }
  return best;
}

}  // namespace detail

/// Pure aggregation: normalization range over the final costs of successful
/// trials, success and percentile curves per pc, and the trials that failed
/// under every parameter point.
inline void aggregate(BenchReport& report) {
  report.curves.clear();
  report.unsolvable_suspect.clear();

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& row : report.rows) {
    if (!row.success) continue;
    lo = std::min(lo, row.final_tau);
    hi = std::max(hi, row.final_tau);
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 0.0;
  }
  report.norm_min = lo;
  report.norm_max = hi;
  const double span = hi > lo ? hi - lo : 1.0;

  const auto checkpoints = detail::curve_checkpoints(report.params.iterations);
  for (double pc : report.params.pc_values) {
    SuccessCurve curve;
    curve.pc = pc;
    curve.iterations = checkpoints;
    std::size_t trial_count = 0;
    for (const auto& row : report.rows)
      if (row.pc == pc) ++trial_count;
    for (std::size_t cp : checkpoints) {
      std::size_t solved = 0, p15 = 0, p25 = 0;
      for (const auto& row : report.rows) {
        if (row.pc != pc) continue;
        const auto best = detail::best_by(row, cp);
        if (!best) continue;
        ++solved;
        const double norm = (*best - lo) / span;
        if (norm <= 0.15) ++p15;
        if (norm <= 0.25) ++p25;
      }
      const double denom = trial_count ? static_cast<double>(trial_count) : 1.0;
      curve.success_rate.push_back(static_cast<double>(solved) / denom);
      curve.below_15th.push_back(static_cast<double>(p15) / denom);
      curve.below_25th.push_back(static_cast<double>(p25) / denom);
    }
    report.curves.push_back(std::move(curve));
  }

  for (std::size_t t = 0; t < report.params.trials; ++t) {
    bool any = false;
    for (const auto& row : report.rows)
      if (row.trial == t && row.success) any = true;
    if (!any) report.unsolvable_suspect.push_back(t);
  }
}

struct TrialScene {
  Environment env;
  Configuration q_init;
  PoseSE2 x_goal;
  std::uint64_t env_seed = 0;
};

/// Goal poses for random trials come from the dataset distribution:
/// area-uniform over the reachable workspace via the occupancy grid, not
/// FK of uniform configurations (which floods the near-base region).
inline std::vector<PoseSE2> goal_pool(const RobotModel& model, std::uint64_t seed) {
  return generate_dataset(model, 180, 160, 10, derive_seed(seed, 0x60A1), 1000000).poses;
}

/// Deterministic per-trial scene: a random environment that leaves the
/// straight start free, and a reachable goal pose clear of the inflated
/// obstacles.
inline TrialScene make_trial_scene(const RobotModel& model, std::uint64_t suite_seed,
                                   std::size_t trial, std::size_t max_obstacles,
                                   double max_coverage, const std::vector<PoseSE2>& goals) {
  Configuration q_init;
  q_init.theta.assign(model.joint_count(), 0.0);
  q_init.d = 0.0;
  if (goals.empty()) throw std::invalid_argument("make_trial_scene: empty goal pool");

  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    const std::uint64_t env_seed = derive_seed(suite_seed, trial * 1000 + attempt);
    Environment env;
    try {
      env = random_environment(model, env_seed, max_obstacles, max_coverage);
    } catch (const std::runtime_error&) {
      continue;
    }
    if (!config_free(env, model, q_init)) continue;

    Rng rng(derive_seed(env_seed, 0xA));
    for (int tries = 0; tries < 200; ++tries) {
      const PoseSE2 goal = goals[rng.uniform_int(0, goals.size() - 1)];
      bool clear = true;
      for (const auto& poly : env.inflated)
        if (poly.contains({goal.x, goal.y})) clear = false;
      if (!clear) continue;
      return {std::move(env), q_init, goal, env_seed};
    }
  }
  throw std::runtime_error("bench: could not build a usable scene for trial " +
                           std::to_string(trial));
}

/// Runs the whole (trial x pc) grid; trials execute concurrently when asked,
/// with identical results either way, and rows come out ordered.
inline BenchReport bench_suite(const RobotModel& model, const MlpNetwork* net,
                               const BenchParams& params) {
  if (params.trials < 1) throw std::invalid_argument("bench needs at least one trial");
  for (double pc : params.pc_values)
    if (pc > 0.0 && net == nullptr)
      throw std::invalid_argument("bench: pc > 0 requires a trained network");

  BenchReport report;
  report.params = params;
  report.rows.resize(params.trials * params.pc_values.size());

  std::vector<io::EnvironmentFile> files;
  for (const auto& f : params.env_files) files.push_back(io::load_environment(f));
  std::vector<PoseSE2> goals;
  if (files.empty()) goals = goal_pool(model, params.seed);

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::string first_error;

  auto worker = [&]() {
    for (;;) {
      const std::size_t trial = next.fetch_add(1);
      if (trial >= params.trials) return;
      try {
        TrialScene scene;
        double e_p = 0.008;
        double e_phi = deg_to_rad(4.0);
        if (!files.empty()) {
          const io::EnvironmentFile& file = files[trial % files.size()];
          scene = {file.env, file.start, file.goal_pose, static_cast<std::uint64_t>(trial)};
          e_p = file.e_p;
          e_phi = file.e_phi;
        } else {
          scene = make_trial_scene(model, params.seed, trial, params.max_obstacles,
                                   params.max_coverage, goals);
        }

        for (std::size_t pi = 0; pi < params.pc_values.size(); ++pi) {
          PlannerParams plan_params;
          plan_params.iterations = params.iterations;
          plan_params.neighbor_count = params.neighbor_count;
          plan_params.ik_bias = params.pc_values[pi];
          plan_params.e_p = e_p;
          plan_params.e_phi = e_phi;
          plan_params.seed = derive_seed(params.seed, trial);

          IkSolverFn ik;
          if (params.pc_values[pi] > 0.0)
            ik = [net](const PoseSE2& x, const Configuration& q) {
              return ik_solve(*net, x, q);
            };

          const auto t0 = std::chrono::steady_clock::now();
          const PlanResult res = plan(scene.env, model, scene.q_init,
                                      {scene.x_goal, std::nullopt}, ik, plan_params);
          const auto t1 = std::chrono::steady_clock::now();

          TrialResult row;
          row.trial = trial;
          row.pc = params.pc_values[pi];
          row.env_seed = scene.env_seed;
          row.success = res.success;
          row.final_tau = res.success ? res.path.total_time() : 0.0;
          row.first_iteration = res.stats.first_solution_iteration;
          row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
          double prev = kInfiniteTime;
          for (const auto& rec : res.stats.trace) {
            if (rec.best_tau < prev) {
              row.improvements.emplace_back(rec.iteration, rec.best_tau);
              prev = rec.best_tau;
            }
          }
          report.rows[trial * params.pc_values.size() + pi] = std::move(row);
        }
      } catch (const std::exception& e) {
        // a broken trial is recorded, not fatal: its rows stay unsuccessful
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error.empty()) first_error = e.what();
        for (std::size_t pi = 0; pi < params.pc_values.size(); ++pi) {
          TrialResult& row = report.rows[trial * params.pc_values.size() + pi];
          row.trial = trial;
          row.pc = params.pc_values[pi];
        }
      }
    }
  };

  const std::size_t thread_count = std::max<std::size_t>(1, params.threads);
  if (thread_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < thread_count; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  aggregate(report);
  return report;
}

// -------------------------------------------------------------------------
// report serialization: delimited text, aggregates recomputable from rows

inline std::string report_to_text(const BenchReport& report) {
  std::ostringstream out;
  out << "masr-bench 1\n";
  out << "trials " << report.params.trials << '\n';
  out << "iterations " << report.params.iterations << '\n';
  out << "neighbors " << report.params.neighbor_count << '\n';
  out << "seed " << report.params.seed << '\n';
  out << "pc";
  for (double pc : report.params.pc_values) out << ' ' << io::g17(pc);
  out << '\n';
  out << "columns trial pc env_seed success final_tau_s first_iteration"
      << (report.params.record_timings ? " wall_ms" : "") << '\n';
  for (const auto& row : report.rows) {
    out << "row " << row.trial << ' ' << io::g17(row.pc) << ' ' << row.env_seed << ' '
        << (row.success ? 1 : 0) << ' ' << io::g17(row.final_tau) << ' '
        << row.first_iteration;
    if (report.params.record_timings) out << ' ' << io::g17(row.wall_ms);
    out << '\n';
    for (const auto& [it, tau] : row.improvements)
      out << "trace " << row.trial << ' ' << io::g17(row.pc) << ' ' << it << ' '
          << io::g17(tau) << '\n';
  }
  out << "norm_range " << io::g17(report.norm_min) << ' ' << io::g17(report.norm_max) << '\n';
  for (const auto& curve : report.curves) {
    for (std::size_t i = 0; i < curve.iterations.size(); ++i) {
      out << "curve " << io::g17(curve.pc) << ' ' << curve.iterations[i] << ' '
          << io::g17(curve.success_rate[i]) << ' ' << io::g17(curve.below_15th[i]) << ' '
          << io::g17(curve.below_25th[i]) << '\n';
    }
  }
  out << "unsolvable_suspect";
  for (std::size_t t : report.unsolvable_suspect) out << ' ' << t;
  out << "\nend\n";
  return out.str();
}

inline void save_report(const std::string& path, const BenchReport& report) {
  io::write_text_file(path, report_to_text(report));
}

/// Parses the rows back and re-derives the aggregates from them (verifying
/// the file's own aggregate lines would be redundant: they are a pure
/// function of the rows).
inline BenchReport report_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "masr-bench" || version != 1)
    throw std::invalid_argument("not a bench report (bad header)");
  BenchReport report;
  std::string key;
  in >> key >> report.params.trials;
  in >> key >> report.params.iterations;
  in >> key >> report.params.neighbor_count;
  in >> key >> report.params.seed;
  std::string line;
  std::getline(in >> std::ws, line);  // pc list
  {
    std::istringstream ls(line);
    ls >> key;
    if (key != "pc") throw std::invalid_argument("bench report: expected 'pc'");
    double v = 0;
    report.params.pc_values.clear();
    while (ls >> v) report.params.pc_values.push_back(v);
  }
  std::getline(in >> std::ws, line);  // columns line
  if (line.rfind("columns ", 0) != 0)
    throw std::invalid_argument("bench report: expected 'columns'");
  report.params.record_timings = line.find("wall_ms") != std::string::npos;

  while (std::getline(in >> std::ws, line)) {
    std::istringstream ls(line);
    ls >> key;
    if (key == "row") {
      TrialResult row;
      int success = 0;
      ls >> row.trial >> row.pc >> row.env_seed >> success >> row.final_tau >>
          row.first_iteration;
      if (report.params.record_timings) ls >> row.wall_ms;
      row.success = success != 0;
      report.rows.push_back(std::move(row));
    } else if (key == "trace") {
      std::size_t trial = 0, iter = 0;
      double pc = 0, tau = 0;
      ls >> trial >> pc >> iter >> tau;
      // rows precede their traces; the latest matching row owns it
      for (auto it = report.rows.rbegin(); it != report.rows.rend(); ++it) {
        if (it->trial == trial && it->pc == pc) {
          it->improvements.emplace_back(iter, tau);
          break;
        }
      }
    } else if (key == "norm_range" || key == "curve" || key == "unsolvable_suspect") {
      // derived lines; recomputed below
    } else if (key == "end") {
      break;
    } else {
      throw std::invalid_argument("bench report: unknown line '" + key + "'");
    }
  }
  aggregate(report);
  return report;
}

inline BenchReport load_report(const std::string& path) {
  return report_from_text(io::read_text_file(path));
}

}  // namespace masr::bench
