#include "solmplan/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

namespace solmplan {

using json = nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (!ok) throw std::invalid_argument("unknown key in " + where + ": " + it.key());
  }
}

LidarModel parse_lidar(const json& j, const LidarModel& base, const std::string& where) {
  reject_unknown(j,
                 {"hfov_deg", "vfov_deg", "azimuth_count", "elevation_count", "max_range",
                  "min_range", "sigma_r", "mount_height"},
                 where);
  LidarModel m = base;
  m.hfov_deg = j.value("hfov_deg", m.hfov_deg);
  m.vfov_deg = j.value("vfov_deg", m.vfov_deg);
  m.azimuth_count = j.value("azimuth_count", m.azimuth_count);
  m.elevation_count = j.value("elevation_count", m.elevation_count);
  m.max_range = j.value("max_range", m.max_range);
  m.min_range = j.value("min_range", m.min_range);
  m.sigma_r = j.value("sigma_r", m.sigma_r);
  m.mount_height = j.value("mount_height", m.mount_height);
  m.validate();
  return m;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  const json j = json::parse(json_text);
  reject_unknown(j,
                 {"scene", "lidar", "lidar_presets", "metric", "observation", "map", "grid",
                  "planner", "optimizer", "mde", "validate_interval", "seed", "threads"},
                 "config");
  RunConfig cfg;
  cfg.scene_path = j.value("scene", cfg.scene_path);
  cfg.lidar_preset = j.value("lidar", cfg.lidar_preset);
  cfg.lidar = LidarModel::by_name(cfg.lidar_preset);
  if (j.contains("lidar_presets")) {
    for (auto it = j["lidar_presets"].begin(); it != j["lidar_presets"].end(); ++it) {
      const LidarModel base = LidarModel::by_name(it.key());  // only named presets may be tuned
      if (it.key() == cfg.lidar_preset)
        cfg.lidar = parse_lidar(it.value(), base, "lidar_presets." + it.key());
    }
  }

  if (j.contains("metric")) {
    const json& m = j["metric"];
    reject_unknown(m, {"w1", "w2", "strategy", "sigma_floor"}, "metric");
    cfg.metric.w1 = m.value("w1", cfg.metric.w1);
    cfg.metric.w2 = m.value("w2", cfg.metric.w2);
    if (m.contains("strategy")) cfg.metric.strategy = strategy_from_string(m["strategy"]);
    cfg.metric.sigma_floor = m.value("sigma_floor", cfg.metric.sigma_floor);
    cfg.metric.validate();
  }
  if (j.contains("observation")) {
    const json& o = j["observation"];
    reject_unknown(o, {"k", "d_thresh", "association"}, "observation");
    cfg.observation.k = o.value("k", cfg.observation.k);
    cfg.observation.d_thresh = o.value("d_thresh", cfg.observation.d_thresh);
    if (o.contains("association")) {
      const std::string a = o["association"];
      if (a == "knn")
        cfg.observation.association = Association::kKnnFit;
      else if (a == "mesh")
        cfg.observation.association = Association::kMeshPlane;
      else
        throw std::invalid_argument("association must be knn|mesh, got: " + a);
    }
  }
  if (j.contains("map")) {
    const json& m = j["map"];
    reject_unknown(m, {"density", "seed", "occ_resolution", "z_band"}, "map");
    cfg.scene_build.map_density = m.value("density", cfg.scene_build.map_density);
    cfg.scene_build.map_seed = m.value("seed", cfg.scene_build.map_seed);
    cfg.scene_build.occ_resolution = m.value("occ_resolution", cfg.scene_build.occ_resolution);
    if (m.contains("z_band")) {
      const auto band = m["z_band"].get<std::vector<double>>();
      if (band.size() != 2 || !(band[0] < band[1]))
        throw std::invalid_argument("map.z_band must be [z_lo, z_hi] with z_lo < z_hi");
      cfg.scene_build.z_band_lo = band[0];
      cfg.scene_build.z_band_hi = band[1];
    }
  }
  if (j.contains("grid")) {
    const json& g = j["grid"];
    reject_unknown(g, {"rx", "ry", "yaw_channels"}, "grid");
    cfg.grid_rx = g.value("rx", cfg.grid_rx);
    cfg.grid_ry = g.value("ry", cfg.grid_ry);
    cfg.grid_c = g.value("yaw_channels", cfg.grid_c);
    if (!(cfg.grid_rx > 0.0 && cfg.grid_ry > 0.0 && cfg.grid_c >= 1))
      throw std::invalid_argument("grid needs rx > 0, ry > 0, yaw_channels >= 1");
  }
  if (j.contains("planner")) {
    const json& p = j["planner"];
    reject_unknown(p, {"rho_q", "l_yaw", "r_safe"}, "planner");
    cfg.planner.rho_q = p.value("rho_q", cfg.planner.rho_q);
    cfg.planner.l_yaw = p.value("l_yaw", cfg.planner.l_yaw);
    cfg.planner.r_safe = p.value("r_safe", cfg.planner.r_safe);
  }
  if (j.contains("optimizer")) {
    const json& o = j["optimizer"];
    reject_unknown(o,
                   {"rho_T", "w_loss", "v_mlon", "v_mlat", "w_max", "r_safe", "w_dyn", "w_safe",
                    "kappa", "alm_multiplier0", "alm_rho0", "alm_gamma", "alm_rho_cap", "alm_tol",
                    "alm_max_outer", "lbfgs_memory", "lbfgs_max_iterations", "lbfgs_grad_tol",
                    "robot", "max_waypoints", "v_avg", "l_yaw", "min_duration"},
                   "optimizer");
    auto& t = cfg.optimizer;
    t.rho_T = o.value("rho_T", t.rho_T);
    t.w_loss = o.value("w_loss", t.w_loss);
    t.v_mlon = o.value("v_mlon", t.v_mlon);
    t.v_mlat = o.value("v_mlat", t.v_mlat);
    t.w_max = o.value("w_max", t.w_max);
    t.r_safe = o.value("r_safe", t.r_safe);
    t.w_dyn = o.value("w_dyn", t.w_dyn);
    t.w_safe = o.value("w_safe", t.w_safe);
    t.kappa = o.value("kappa", t.kappa);
    t.alm_multiplier0 = o.value("alm_multiplier0", t.alm_multiplier0);
    t.alm_rho0 = o.value("alm_rho0", t.alm_rho0);
    t.alm_gamma = o.value("alm_gamma", t.alm_gamma);
    t.alm_rho_cap = o.value("alm_rho_cap", t.alm_rho_cap);
    t.alm_tol = o.value("alm_tol", t.alm_tol);
    t.alm_max_outer = o.value("alm_max_outer", t.alm_max_outer);
    t.lbfgs_memory = o.value("lbfgs_memory", t.lbfgs_memory);
    t.lbfgs_max_iterations = o.value("lbfgs_max_iterations", t.lbfgs_max_iterations);
    t.lbfgs_grad_tol = o.value("lbfgs_grad_tol", t.lbfgs_grad_tol);
    if (o.contains("robot")) {
      const std::string r = o["robot"];
      if (r == "omnidirectional")
        t.robot = RobotKind::kOmnidirectional;
      else if (r == "nonholonomic")
        t.robot = RobotKind::kNonholonomic;
      else
        throw std::invalid_argument("robot must be omnidirectional|nonholonomic, got: " + r);
    }
    t.max_waypoints = o.value("max_waypoints", t.max_waypoints);
    t.v_avg = o.value("v_avg", t.v_avg);
    t.l_yaw = o.value("l_yaw", t.l_yaw);
    t.min_duration = o.value("min_duration", t.min_duration);
    t.validate();
  }
  if (j.contains("mde")) {
    const json& m = j["mde"];
    reject_unknown(m, {"n", "radius", "seed", "max_iterations", "tol"}, "mde");
    cfg.mde.n = m.value("n", cfg.mde.n);
    cfg.mde.radius = m.value("radius", cfg.mde.radius);
    cfg.mde.seed = m.value("seed", cfg.mde.seed);
    cfg.mde.registration.max_iterations =
        m.value("max_iterations", cfg.mde.registration.max_iterations);
    cfg.mde.registration.tol = m.value("tol", cfg.mde.registration.tol);
    cfg.mde.validate();
  }
  cfg.validate_interval = j.value("validate_interval", cfg.validate_interval);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.threads = j.value("threads", cfg.threads);
  if (cfg.threads < 1) throw std::invalid_argument("threads must be >= 1");
  cfg.mde.registration.obs = cfg.observation;  // registration shares the observation model
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

}  // namespace solmplan
