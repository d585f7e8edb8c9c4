#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "masr/dataset.hpp"
#include "masr/environment.hpp"
#include "masr/mlp.hpp"
#include "masr/motion.hpp"
#include "masr/robot.hpp"
#include "masr/se2.hpp"
#include "masr/train.hpp"

namespace masr::io {

/// Shortest-exact decimal for text formats (17 significant digits always
/// round-trips a double).
inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open file for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("failed writing file: " + path);
}

namespace detail {

inline void require_keys(const nlohmann::json& obj, const std::string& where,
                         std::initializer_list<const char*> required,
                         std::initializer_list<const char*> optional = {}) {
  if (!obj.is_object()) throw std::invalid_argument(where + " must be an object");
  for (const char* k : required)
    if (!obj.contains(k)) throw std::invalid_argument(where + " is missing key '" + k + "'");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* k : required) known = known || key == k;
    for (const char* k : optional) known = known || key == k;
    if (!known) throw std::invalid_argument(where + " has unknown key '" + key + "'");
  }
}

inline std::vector<double> double_list(const nlohmann::json& arr, const std::string& where) {
  if (!arr.is_array() || arr.empty())
    throw std::invalid_argument(where + " must be a non-empty array");
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number()) throw std::invalid_argument(where + " must contain numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace detail

/// Everything a planning problem needs: the arm, the scene (already
/// inflated with the arm's half-width), the start configuration, the goal
/// pose (optionally with a goal configuration), and the goal tolerances.
struct EnvironmentFile {
  RobotModel robot;
  Environment env;
  Configuration start;
  PoseSE2 goal_pose;
  std::optional<Configuration> goal_config;
  double e_p = 0.008;
  double e_phi = deg_to_rad(4.0);
};

inline EnvironmentFile parse_environment(const nlohmann::json& j) {
  detail::require_keys(j, "environment file",
                       {"format_version", "robot", "obstacles", "start", "goal", "tolerances"});
  if (j["format_version"].get<int>() != 1)
    throw std::invalid_argument("unsupported environment format_version");

  const auto& jr = j["robot"];
  detail::require_keys(jr, "robot",
                       {"link_lengths_m", "joint_bound_deg", "ma_speed_m_s",
                        "joint_speed_rad_s", "link_width_m"});
  std::vector<double> bounds_deg = detail::double_list(jr["joint_bound_deg"], "joint_bound_deg");
  std::vector<double> bounds;
  bounds.reserve(bounds_deg.size());
  for (double b : bounds_deg) bounds.push_back(deg_to_rad(b));
  RobotModel robot(detail::double_list(jr["link_lengths_m"], "link_lengths_m"),
                   std::move(bounds), jr["ma_speed_m_s"].get<double>(),
                   jr["joint_speed_rad_s"].get<double>(), jr["link_width_m"].get<double>());

  std::vector<Polygon> obstacles;
  if (!j["obstacles"].is_array()) throw std::invalid_argument("obstacles must be an array");
  for (const auto& poly : j["obstacles"]) {
    if (!poly.is_array() || poly.size() < 3)
      throw std::invalid_argument("each obstacle needs at least 3 vertices");
    std::vector<Eigen::Vector2d> verts;
    for (const auto& v : poly) {
      if (!v.is_array() || v.size() != 2)
        throw std::invalid_argument("obstacle vertices must be [x, y] pairs");
      verts.emplace_back(v[0].get<double>(), v[1].get<double>());
    }
    obstacles.emplace_back(std::move(verts));
  }
  Environment env(std::move(obstacles), robot.total_length());
  env = inflate_obstacles(env, robot.link_width());

  const auto& js = j["start"];
  detail::require_keys(js, "start", {"theta_deg", "d_m"});
  Configuration start;
  for (double t : detail::double_list(js["theta_deg"], "start theta_deg"))
    start.theta.push_back(deg_to_rad(t));
  start.d = js["d_m"].get<double>();
  robot.require_feasible(start);

  const auto& jg = j["goal"];
  detail::require_keys(jg, "goal", {"x_m", "y_m", "phi_deg"}, {"goal_theta_deg", "goal_d_m"});
  const PoseSE2 goal(jg["x_m"].get<double>(), jg["y_m"].get<double>(),
                     deg_to_rad(jg["phi_deg"].get<double>()));
  std::optional<Configuration> goal_config;
  if (jg.contains("goal_theta_deg") != jg.contains("goal_d_m"))
    throw std::invalid_argument("goal_theta_deg and goal_d_m must appear together");
  if (jg.contains("goal_theta_deg")) {
    Configuration qg;
    for (double t : detail::double_list(jg["goal_theta_deg"], "goal_theta_deg"))
      qg.theta.push_back(deg_to_rad(t));
    qg.d = jg["goal_d_m"].get<double>();
    robot.require_feasible(qg);
    goal_config = std::move(qg);
  }

  const auto& jt = j["tolerances"];
  detail::require_keys(jt, "tolerances", {"e_p_mm", "e_phi_deg"});

  EnvironmentFile file{std::move(robot), std::move(env),      std::move(start),
                       goal,             std::move(goal_config),
                       jt["e_p_mm"].get<double>() / 1000.0,
                       deg_to_rad(jt["e_phi_deg"].get<double>())};
  return file;
}

inline EnvironmentFile load_environment(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("invalid JSON in " + path + ": " + e.what());
  }
  return parse_environment(j);
}

inline nlohmann::json environment_to_json(const EnvironmentFile& file) {
  nlohmann::json j;
  j["format_version"] = 1;
  auto& jr = j["robot"];
  jr["link_lengths_m"] = file.robot.link_lengths();
  std::vector<double> bounds_deg;
  for (double b : file.robot.joint_bounds()) bounds_deg.push_back(rad_to_deg(b));
  jr["joint_bound_deg"] = bounds_deg;
  jr["ma_speed_m_s"] = file.robot.ma_speed();
  jr["joint_speed_rad_s"] = file.robot.joint_speed();
  jr["link_width_m"] = file.robot.link_width();

  j["obstacles"] = nlohmann::json::array();
  for (const auto& poly : file.env.obstacles) {
    nlohmann::json jp = nlohmann::json::array();
    for (const auto& v : poly.vertices()) jp.push_back({v.x(), v.y()});
    j["obstacles"].push_back(std::move(jp));
  }

  auto& js = j["start"];
  std::vector<double> start_deg;
  for (double t : file.start.theta) start_deg.push_back(rad_to_deg(t));
  js["theta_deg"] = start_deg;
  js["d_m"] = file.start.d;

  auto& jg = j["goal"];
  jg["x_m"] = file.goal_pose.x;
  jg["y_m"] = file.goal_pose.y;
  jg["phi_deg"] = rad_to_deg(file.goal_pose.phi);
  if (file.goal_config) {
    std::vector<double> goal_deg;
    for (double t : file.goal_config->theta) goal_deg.push_back(rad_to_deg(t));
    jg["goal_theta_deg"] = goal_deg;
    jg["goal_d_m"] = file.goal_config->d;
  }

  auto& jt = j["tolerances"];
  jt["e_p_mm"] = file.e_p * 1000.0;
  jt["e_phi_deg"] = rad_to_deg(file.e_phi);
  return j;
}

inline void save_environment(const std::string& path, const EnvironmentFile& file) {
  write_text_file(path, environment_to_json(file).dump(2) + "\n");
}

// -------------------------------------------------------------------------
// dataset: plain text, one pose per row

inline std::string dataset_to_text(const PoseDataset& data) {
  std::ostringstream out;
  out << "masr-dataset 1\n";
  out << "grid " << data.grid_x << ' ' << data.grid_y << '\n';
  out << "rho " << data.rho << '\n';
  out << "seed " << data.seed << '\n';
  out << "draws " << data.draws << '\n';
  out << "density_reached " << (data.density_reached ? 1 : 0) << '\n';
  out << "count " << data.poses.size() << '\n';
  for (const auto& p : data.poses)
    out << g17(p.x) << ' ' << g17(p.y) << ' ' << g17(p.phi) << '\n';
  return out.str();
}

inline void save_dataset(const std::string& path, const PoseDataset& data) {
  write_text_file(path, dataset_to_text(data));
}

inline PoseDataset dataset_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "masr-dataset" || version != 1)
    throw std::invalid_argument("not a dataset file (bad header)");
  PoseDataset data;
  std::string key;
  std::size_t count = 0;
  int reached = 0;
  in >> key >> data.grid_x >> data.grid_y;
  if (key != "grid") throw std::invalid_argument("dataset file: expected 'grid'");
  in >> key >> data.rho;
  if (key != "rho") throw std::invalid_argument("dataset file: expected 'rho'");
  in >> key >> data.seed;
  if (key != "seed") throw std::invalid_argument("dataset file: expected 'seed'");
  in >> key >> data.draws;
  if (key != "draws") throw std::invalid_argument("dataset file: expected 'draws'");
  in >> key >> reached;
  if (key != "density_reached")
    throw std::invalid_argument("dataset file: expected 'density_reached'");
  data.density_reached = reached != 0;
  in >> key >> count;
  if (key != "count") throw std::invalid_argument("dataset file: expected 'count'");
  data.poses.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double x = 0, y = 0, phi = 0;
    if (!(in >> x >> y >> phi))
      throw std::invalid_argument("dataset file: truncated pose rows");
    PoseSE2 p;
    p.x = x;
    p.y = y;
    p.phi = phi;  // stored normalized; keep the exact bits
    data.poses.push_back(p);
  }
  return data;
}

inline PoseDataset load_dataset(const std::string& path) {
  return dataset_from_text(read_text_file(path));
}

// -------------------------------------------------------------------------
// network weights: plain text, row-major decimal

inline std::string network_to_text(const MlpNetwork& net) {
  std::ostringstream out;
  out << "masr-ik-model 1\n";
  char fp[20];
  std::snprintf(fp, sizeof(fp), "%016llx",
                static_cast<unsigned long long>(net.fingerprint));
  out << "fingerprint " << fp << '\n';
  out << "activation " << net.activation << '\n';
  auto vec_line = [&out](const char* name, const Eigen::VectorXd& v) {
    out << name;
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << g17(v(i));
    out << '\n';
  };
  vec_line("input_scale", net.input_scale);
  vec_line("output_center", net.output_center);
  vec_line("output_halfspan", net.output_halfspan);
  out << "layers " << net.weights.size() << '\n';
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const auto& w = net.weights[l];
    out << "layer " << l << ' ' << w.rows() << ' ' << w.cols() << '\n';
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) out << (c ? " " : "") << g17(w(r, c));
      out << '\n';
    }
    out << "bias";
    for (Eigen::Index r = 0; r < net.biases[l].size(); ++r)
      out << ' ' << g17(net.biases[l](r));
    out << '\n';
  }
  out << "end\n";
  return out.str();
}

inline void save_network(const std::string& path, const MlpNetwork& net) {
  write_text_file(path, network_to_text(net));
}

inline MlpNetwork network_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string magic, key;
  int version = 0;
  in >> magic >> version;
  if (magic != "masr-ik-model" || version != 1)
    throw std::invalid_argument("not a model file (bad header)");
  MlpNetwork net;
  std::string fp;
  in >> key >> fp;
  if (key != "fingerprint") throw std::invalid_argument("model file: expected 'fingerprint'");
  net.fingerprint = std::stoull(fp, nullptr, 16);
  in >> key >> net.activation;
  if (key != "activation") throw std::invalid_argument("model file: expected 'activation'");
  if (net.activation != "tanh")
    throw std::invalid_argument("model file: unsupported activation " + net.activation);

  auto read_vec = [&in](const char* name, Eigen::VectorXd& v, Eigen::Index size) {
    // sizes are discovered from the first layer header for input, so parse
    // the remainder of the line token-wise
    std::vector<double> vals;
    std::string line;
    std::getline(in >> std::ws, line);
    std::istringstream ls(line);
    std::string label;
    ls >> label;
    if (label != name)
      throw std::invalid_argument(std::string("model file: expected '") + name + "'");
    double x = 0;
    while (ls >> x) vals.push_back(x);
    if (size >= 0 && static_cast<Eigen::Index>(vals.size()) != size)
      throw std::invalid_argument(std::string("model file: bad length for ") + name);
    v.resize(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) v(static_cast<Eigen::Index>(i)) = vals[i];
  };
  read_vec("input_scale", net.input_scale, -1);
  read_vec("output_center", net.output_center, -1);
  read_vec("output_halfspan", net.output_halfspan, -1);

  std::size_t layers = 0;
  in >> key >> layers;
  if (key != "layers") throw std::invalid_argument("model file: expected 'layers'");
  for (std::size_t l = 0; l < layers; ++l) {
    std::size_t idx = 0;
    Eigen::Index rows = 0, cols = 0;
    in >> key >> idx >> rows >> cols;
    if (key != "layer" || idx != l) throw std::invalid_argument("model file: bad layer header");
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        if (!(in >> w(r, c))) throw std::invalid_argument("model file: truncated weights");
    net.weights.push_back(std::move(w));
    Eigen::VectorXd b(rows);
    in >> key;
    if (key != "bias") throw std::invalid_argument("model file: expected 'bias'");
    for (Eigen::Index r = 0; r < rows; ++r)
      if (!(in >> b(r))) throw std::invalid_argument("model file: truncated biases");
    net.biases.push_back(std::move(b));
  }
  in >> key;
  if (key != "end") throw std::invalid_argument("model file: missing end marker");
  if (net.weights.empty()) throw std::invalid_argument("model file: no layers");
  return net;
}

inline MlpNetwork load_network(const std::string& path) {
  return network_from_text(read_text_file(path));
}

/// Guards against applying a network trained for a different arm.
inline void require_matching_robot(const MlpNetwork& net, const RobotModel& model) {
  if (net.fingerprint != robot_fingerprint(model))
    throw std::invalid_argument("model file was trained for a different robot");
}

// -------------------------------------------------------------------------
// training log

inline std::string training_log_to_text(const std::vector<EpochStats>& log) {
  std::ostringstream out;
  out << "masr-train-log 1\n";
  out << "epoch mean_loss mean_dp_mm mean_dphi_deg\n";
  for (const auto& row : log)
    out << row.epoch << ' ' << g17(row.mean_loss) << ' ' << g17(row.mean_dp_mm) << ' '
        << g17(row.mean_dphi_deg) << '\n';
  return out.str();
}

inline void save_training_log(const std::string& path, const std::vector<EpochStats>& log) {
  write_text_file(path, training_log_to_text(log));
}

// -------------------------------------------------------------------------
// path files

inline nlohmann::json path_to_json(const Path& path) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["tau_s"] = path.total_time();
  j["waypoints"] = nlohmann::json::array();
  for (std::size_t i = 0; i < path.waypoints.size(); ++i) {
    nlohmann::json w;
    w["theta_rad"] = path.waypoints[i].theta;
    w["d_m"] = path.waypoints[i].d;
    w["time_s"] = path.cum_time[i];
    j["waypoints"].push_back(std::move(w));
  }
  j["actions"] = nlohmann::json::array();
  for (const auto& a : path.actions) {
    nlohmann::json ja;
    ja["dtheta_rad"] = a.dtheta;
    ja["dd_m"] = a.dd;
    j["actions"].push_back(std::move(ja));
  }
  return j;
}

inline void save_path(const std::string& path_file, const Path& path) {
  write_text_file(path_file, path_to_json(path).dump(2) + "\n");
}

inline Path path_from_json(const nlohmann::json& j) {
  detail::require_keys(j, "path file", {"format_version", "tau_s", "waypoints", "actions"});
  if (j["format_version"].get<int>() != 1)
    throw std::invalid_argument("unsupported path format_version");
  Path path;
  for (const auto& w : j["waypoints"]) {
    detail::require_keys(w, "waypoint", {"theta_rad", "d_m", "time_s"});
    Configuration q;
    q.theta = detail::double_list(w["theta_rad"], "theta_rad");
    q.d = w["d_m"].get<double>();
    path.waypoints.push_back(std::move(q));
    path.cum_time.push_back(w["time_s"].get<double>());
  }
  for (const auto& a : j["actions"]) {
    detail::require_keys(a, "action", {"dtheta_rad", "dd_m"});
    Action act;
    act.dtheta = detail::double_list(a["dtheta_rad"], "dtheta_rad");
    act.dd = a["dd_m"].get<double>();
    path.actions.push_back(std::move(act));
  }
  if (path.waypoints.size() != path.actions.size() + 1)
    throw std::invalid_argument("path file: waypoint/action count mismatch");
  const double tau = j["tau_s"].get<double>();
  if (std::abs(tau - path.total_time()) > 1e-9)
    throw std::invalid_argument("path file: header tau does not match the last waypoint");
  return path;
}

inline Path load_path(const std::string& path_file) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path_file));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("invalid JSON in path file: ") + e.what());
  }
  return path_from_json(j);
}

}  // namespace masr::io
