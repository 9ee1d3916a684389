#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "solmplan/config.hpp"
#include "solmplan/metric.hpp"
#include "solmplan/registration.hpp"
#include "solmplan/scan_sim.hpp"
#include "solmplan/scene.hpp"
#include "solmplan/sdf.hpp"
#include "solmplan/search.hpp"
#include "solmplan/solm.hpp"
#include "solmplan/traj_opt.hpp"

namespace {

using namespace solmplan;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitPlanning = 3;

PlanarPose parse_pose(const std::string& text) {
  double x, y, t;
  if (std::sscanf(text.c_str(), "%lf,%lf,%lf", &x, &y, &t) != 3)
    throw std::invalid_argument("pose must be x,y,theta (got: " + text + ")");
  return {x, y, t};
}

RunConfig config_for(const std::string& config_path, const std::string& scene_override,
                     const std::string& lidar_override) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
  if (!scene_override.empty()) cfg.scene_path = scene_override;
  if (!lidar_override.empty()) {
    cfg.lidar_preset = lidar_override;
    cfg.lidar = LidarModel::by_name(lidar_override);
  }
  if (cfg.scene_path.empty()) throw std::runtime_error("no scene file given (--scene or config)");
  if (!std::filesystem::exists(cfg.scene_path))
    throw std::runtime_error("scene file not found: " + cfg.scene_path);
  return cfg;
}

SolmBuildParams solm_params_from(const RunConfig& cfg, const SceneModel& scene) {
  SolmBuildParams p;
  p.grid = grid_spec_for_scene(scene, cfg.grid_rx, cfg.grid_ry, cfg.grid_c);
  p.lidar = cfg.lidar;
  p.metric = cfg.metric;
  p.observation = cfg.observation;
  p.r_safe = cfg.planner.r_safe;
  p.seed = cfg.seed;
  p.workers = cfg.threads;
  return p;
}

void write_mesh_obj(const TriangleMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  char buf[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
    out << buf;
  }
  for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

void write_cloud_xyz(const MapCloud& cloud, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  char buf[128];
  for (const auto& p : cloud.points()) {
    std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g\n", p.x(), p.y(), p.z());
    out << buf;
  }
}

void write_occupancy_pgm(const OccupancyGrid2D& occ, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "P5\n" << occ.width << " " << occ.height << "\n255\n";
  for (int j = occ.height - 1; j >= 0; --j)
    for (int i = 0; i < occ.width; ++i) out.put(occ.at(i, j) ? '\0' : '\xff');
}

void write_path_csv(const GridPath& path, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot open for writing: " + file);
  out << "i,j,k,x,y,theta\n";
  char buf[160];
  for (std::size_t r = 0; r < path.cells.size(); ++r) {
    const auto& c = path.cells[r];
    const auto& p = path.poses[r];
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%.9g,%.9g,%.9g\n", c.i, c.j, c.k, p.x, p.y, p.theta);
    out << buf;
  }
}

void write_traj_csv(const CubicSplineTraj& traj, const SolmGrid& solm, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot open for writing: " + file);
  out << "t,x,y,theta,vx,vy,omega,q_interp\n";
  const double total = traj.total_duration();
  const double dt = 0.02;  // 50 Hz
  char buf[240];
  const int steps = static_cast<int>(std::ceil(total / dt - 1e-9));
  for (int s = 0; s <= steps; ++s) {
    const double t = std::min(total, s * dt);
    const TrajPoint pt = traj.evaluate(t);
    const PlanarPose pose = pt.pose();
    const double q = interpolate(solm, pose).q;
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", t, pose.x, pose.y,
                  pose.theta, pt.velocity.x(), pt.velocity.y(), pt.velocity.z(), q);
    out << buf;
  }
}

int cmd_scene_build(const std::string& config_path, const std::string& scene_path,
                    const std::string& out_prefix) {
  const RunConfig cfg = config_for(config_path, scene_path, "");
  const SceneDescription desc = load_scene_description(cfg.scene_path);
  const SceneModel model = build_scene_model(desc, cfg.scene_build);
  std::printf("scene '%s': %zu vertices, %zu triangles, %zu map points, %dx%d occupancy\n",
              model.description.name.c_str(), model.mesh.vertices.size(),
              model.mesh.triangles.size(), model.map.size(), model.occupancy.width,
              model.occupancy.height);
  if (!out_prefix.empty()) {
    write_mesh_obj(model.mesh, out_prefix + "_mesh.obj");
    write_cloud_xyz(model.map, out_prefix + "_cloud.xyz");
    write_occupancy_pgm(model.occupancy, out_prefix + "_occ.pgm");
    export_sdf_image(build_sdf(model.occupancy), out_prefix + "_sdf.pgm");
  }
  return kExitOk;
}

int cmd_solm_build(const std::string& config_path, const std::string& scene_path,
                   const std::string& lidar, const std::string& out, int threads,
                   std::int64_t seed) {
  RunConfig cfg = config_for(config_path, scene_path, lidar);
  if (threads > 0) cfg.threads = threads;
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  const SceneModel model = build_scene_model(load_scene_description(cfg.scene_path), cfg.scene_build);
  const SolmBuildParams params = solm_params_from(cfg, model);

  const auto t0 = std::chrono::steady_clock::now();
  const SolmGrid grid = build_solm(model, params);
  const auto t1 = std::chrono::steady_clock::now();

  std::size_t obstacles = 0;
  for (auto o : grid.obstacle) obstacles += o;
  save_solm(grid, out);
  for (int k = 0; k < grid.spec.c; ++k)
    export_solm_image(grid, k, out + "_ch" + std::to_string(k) + ".pgm");
  std::printf("solm %dx%dx%d: %zu cells, %zu obstacle columns skipped, %.2f s\n", grid.spec.a,
              grid.spec.b, grid.spec.c, grid.values.size(), obstacles,
              std::chrono::duration<double>(t1 - t0).count());
  return kExitOk;
}

int cmd_solm_export(const std::string& solm_path, const std::string& out_prefix, int channel) {
  const SolmGrid grid = load_solm(solm_path);
  if (channel >= 0) {
    export_solm_image(grid, channel, out_prefix + "_ch" + std::to_string(channel) + ".pgm");
  } else {
    for (int k = 0; k < grid.spec.c; ++k)
      export_solm_image(grid, k, out_prefix + "_ch" + std::to_string(k) + ".pgm");
  }
  return kExitOk;
}

int cmd_metric_eval(const std::string& config_path, const std::string& scene_path,
                    const std::string& lidar, const std::string& pose_text,
                    const std::string& strategy, std::int64_t seed) {
  RunConfig cfg = config_for(config_path, scene_path, lidar);
  if (!strategy.empty()) cfg.metric.strategy = strategy_from_string(strategy);
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  const PlanarPose pose = parse_pose(pose_text);
  const SceneModel model = build_scene_model(load_scene_description(cfg.scene_path), cfg.scene_build);
  const ScanSimulator sim(model.mesh);
  const Scan scan = simulate_scan(sim, pose, cfg.lidar, cfg.seed);
  MetricResult res;
  if (scan.size() >= 4) {
    const ObservationSet obs = build_observations(scan, model.map, pose, cfg.observation,
                                                  cfg.lidar.mount_height, &model.mesh);
    res = evaluate(obs, cfg.metric);
  } else {
    res.degenerate = true;
    res.q = std::numeric_limits<double>::infinity();
  }
  std::printf("strategy=%s q=%.9g sigma1=%.9g xi=%.9g degenerate=%d lambda=%.9g,%.9g,%.9g,%.9g\n",
              to_string(cfg.metric.strategy).c_str(), res.q, res.sigma1, res.xi,
              res.degenerate ? 1 : 0, res.lambda_top[0], res.lambda_top[1], res.lambda_top[2],
              res.lambda_top[3]);
  return kExitOk;
}

int cmd_mde_eval(const std::string& config_path, const std::string& scene_path,
                 const std::string& lidar, const std::string& pose_text, int n, double radius,
                 std::int64_t seed, const std::string& out_csv) {
  RunConfig cfg = config_for(config_path, scene_path, lidar);
  if (n > 0) cfg.mde.n = n;
  if (radius >= 0.0) cfg.mde.radius = radius;
  if (seed >= 0) cfg.mde.seed = static_cast<std::uint64_t>(seed);
  const PlanarPose pose = parse_pose(pose_text);
  const SceneModel model = build_scene_model(load_scene_description(cfg.scene_path), cfg.scene_build);
  const ScanSimulator sim(model.mesh);
  const MdeEvaluator eval(model, sim, cfg.lidar, cfg.mde);
  std::vector<double> per;
  const double value = eval.evaluate(pose, per);
  if (!out_csv.empty()) {
    std::ofstream out(out_csv);
    if (!out) throw std::runtime_error("cannot open for writing: " + out_csv);
    out << "disturbance,squared_error\n";
    char buf[64];
    for (std::size_t i = 0; i < per.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%.9g\n", i, per[i]);
      out << buf;
    }
  }
  std::printf("mde=%.9g n=%d radius=%.9g\n", value, cfg.mde.n, cfg.mde.radius);
  return kExitOk;
}

int cmd_plan(const std::string& config_path, const std::string& scene_path,
             const std::string& lidar, const std::string& solm_path, const std::string& start_text,
             const std::string& goal_text, double rho_q, bool baseline,
             const std::string& out_prefix) {
  RunConfig cfg = config_for(config_path, scene_path, lidar);
  if (rho_q >= 0.0) cfg.planner.rho_q = rho_q;
  if (baseline) {
    cfg.planner.rho_q = 0.0;
    cfg.optimizer.w_loss = 0.0;
  }
  const PlanarPose start = parse_pose(start_text);
  const PlanarPose goal = parse_pose(goal_text);

  const SceneModel model = build_scene_model(load_scene_description(cfg.scene_path), cfg.scene_build);
  const SolmGrid solm = load_solm(solm_path);
  const SdfField sdf = build_sdf(model.occupancy);

  const GridPath path = search(solm, sdf, start, goal, cfg.planner);
  write_path_csv(path, out_prefix + "_path.csv");
  if (path.cells.size() < 2) {
    std::printf("plan: start equals goal; single-pose path written\n");
    std::ofstream out(out_prefix + "_traj.csv");
    out << "t,x,y,theta,vx,vy,omega,q_interp\n";
    char buf[240];
    const double q = interpolate(solm, path.poses[0]).q;
    std::snprintf(buf, sizeof buf, "0,%.9g,%.9g,%.9g,0,0,0,%.9g\n", path.poses[0].x,
                  path.poses[0].y, path.poses[0].theta, q);
    out << buf;
    return kExitOk;
  }

  const CubicSplineTraj init = init_from_path(path, cfg.optimizer);
  OptReport report;
  const CubicSplineTraj traj = optimize(init, solm, sdf, cfg.optimizer, &report);
  write_traj_csv(traj, solm, out_prefix + "_traj.csv");
  std::printf("plan: %zu path cells, %d segments, objective=%.9g, duration=%.9g s%s%s\n",
              path.cells.size(), traj.segments(), report.objective, traj.total_duration(),
              report.line_search_warning ? " [line-search warning]" : "",
              report.infeasible_start ? " [infeasible start]" : "");
  return kExitOk;
}

int cmd_validate(const std::string& config_path, const std::string& scene_path,
                 const std::string& lidar, const std::string& traj_csv, double interval, int n,
                 double radius, std::int64_t seed, const std::string& out_csv) {
  RunConfig cfg = config_for(config_path, scene_path, lidar);
  if (n > 0) cfg.mde.n = n;
  if (radius >= 0.0) cfg.mde.radius = radius;
  if (seed >= 0) cfg.mde.seed = static_cast<std::uint64_t>(seed);
  if (interval > 0.0) cfg.validate_interval = interval;

  std::ifstream in(traj_csv);
  if (!in) throw std::runtime_error("cannot open trajectory CSV: " + traj_csv);
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> ts;
  std::vector<PlanarPose> poses;
  while (std::getline(in, line)) {
    double t, x, y, th;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &t, &x, &y, &th) != 4) continue;
    ts.push_back(t);
    poses.emplace_back(x, y, th);
  }
  if (poses.empty()) throw std::runtime_error("trajectory CSV has no rows: " + traj_csv);

  const SceneModel model = build_scene_model(load_scene_description(cfg.scene_path), cfg.scene_build);
  const ScanSimulator sim(model.mesh);
  const MdeEvaluator eval(model, sim, cfg.lidar, cfg.mde);

  std::ofstream out(out_csv);
  if (!out) throw std::runtime_error("cannot open for writing: " + out_csv);
  out << "t,x,y,theta,mde\n";
  char buf[200];
  double next_t = 0.0, sum = 0.0;
  int count = 0;
  for (std::size_t r = 0; r < ts.size(); ++r) {
    if (ts[r] + 1e-9 < next_t && r + 1 != ts.size()) continue;
    const double value = eval.evaluate(poses[r]);
    sum += value;
    ++count;
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g\n", ts[r], poses[r].x, poses[r].y,
                  poses[r].theta, value);
    out << buf;
    next_t = ts[r] + cfg.validate_interval;
  }
  std::printf("validate: %d poses, S=%.9g (accumulated MDE)\n", count, sum);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SOLM-based localizability-aware planning toolkit"};
  app.require_subcommand(1);

  std::string config_path, scene_path, lidar, out_prefix = "out", pose_text, strategy;
  std::string solm_path, out_file = "solm.bin", start_text, goal_text, traj_csv;
  std::string out_csv = "validation.csv";
  int threads = -1, n = -1, channel = -1;
  double radius = -1.0, rho_q = -1.0, interval = -1.0;
  std::int64_t seed = -1;
  bool baseline = false;

  auto* scene_cmd = app.add_subcommand("scene", "scene model operations");
  auto* scene_build = scene_cmd->add_subcommand("build", "compile a scene description");
  scene_build->add_option("--config", config_path, "run config JSON");
  scene_build->add_option("--scene", scene_path, "scene description JSON");
  scene_build->add_option("--out-prefix", out_prefix, "artifact prefix (mesh/cloud/occupancy)");

  auto* solm_cmd = app.add_subcommand("solm", "observation loss map operations");
  auto* solm_build_cmd = solm_cmd->add_subcommand("build", "evaluate the loss over the state grid");
  solm_build_cmd->add_option("--config", config_path, "run config JSON");
  solm_build_cmd->add_option("--scene", scene_path, "scene description JSON");
  solm_build_cmd->add_option("--lidar", lidar, "LiDAR preset (mid70-like|spin-360)");
  solm_build_cmd->add_option("--out", out_file, "output SOLM binary");
  solm_build_cmd->add_option("--threads", threads, "worker count");
  solm_build_cmd->add_option("--seed", seed, "global seed");
  auto* solm_export_cmd = solm_cmd->add_subcommand("export", "write per-channel graymaps");
  solm_export_cmd->add_option("--solm", solm_path, "SOLM binary")->required();
  solm_export_cmd->add_option("--out-prefix", out_prefix, "image prefix");
  solm_export_cmd->add_option("--channel", channel, "single channel (default: all)");

  auto* metric_cmd = app.add_subcommand("metric", "observation loss metric");
  auto* metric_eval = metric_cmd->add_subcommand("eval", "evaluate the metric at a pose");
  metric_eval->add_option("--config", config_path, "run config JSON");
  metric_eval->add_option("--scene", scene_path, "scene description JSON");
  metric_eval->add_option("--lidar", lidar, "LiDAR preset");
  metric_eval->add_option("--pose", pose_text, "pose x,y,theta")->required();
  metric_eval->add_option("--strategy", strategy, "min|n|max");
  metric_eval->add_option("--seed", seed, "scan seed");

  auto* mde_cmd = app.add_subcommand("mde", "disturbance-induced error");
  auto* mde_eval = mde_cmd->add_subcommand("eval", "mean disturbance-induced error at a pose");
  mde_eval->add_option("--config", config_path, "run config JSON");
  mde_eval->add_option("--scene", scene_path, "scene description JSON");
  mde_eval->add_option("--lidar", lidar, "LiDAR preset");
  mde_eval->add_option("--pose", pose_text, "pose x,y,theta")->required();
  mde_eval->add_option("--n", n, "disturbance count");
  mde_eval->add_option("--radius", radius, "twist-ball radius");
  mde_eval->add_option("--seed", seed, "seed");
  mde_eval->add_option("--out", out_csv, "per-disturbance CSV");

  auto* plan_cmd = app.add_subcommand("plan", "search + optimize a trajectory");
  plan_cmd->add_option("--config", config_path, "run config JSON");
  plan_cmd->add_option("--scene", scene_path, "scene description JSON");
  plan_cmd->add_option("--lidar", lidar, "LiDAR preset");
  plan_cmd->add_option("--solm", solm_path, "SOLM binary")->required();
  plan_cmd->add_option("--start", start_text, "start pose x,y,theta")->required();
  plan_cmd->add_option("--goal", goal_text, "goal pose x,y,theta")->required();
  plan_cmd->add_option("--rho-q", rho_q, "loss weight in the search cost");
  plan_cmd->add_flag("--baseline", baseline, "ignore observation loss (shortest path)");
  plan_cmd->add_option("--out-prefix", out_prefix, "CSV prefix");

  auto* validate_cmd = app.add_subcommand("validate", "per-pose MDE along a trajectory CSV");
  validate_cmd->add_option("--config", config_path, "run config JSON");
  validate_cmd->add_option("--scene", scene_path, "scene description JSON");
  validate_cmd->add_option("--lidar", lidar, "LiDAR preset");
  validate_cmd->add_option("--traj", traj_csv, "trajectory CSV from plan")->required();
  validate_cmd->add_option("--interval", interval, "sampling interval [s]");
  validate_cmd->add_option("--n", n, "disturbance count");
  validate_cmd->add_option("--radius", radius, "twist-ball radius");
  validate_cmd->add_option("--seed", seed, "seed");
  validate_cmd->add_option("--out", out_csv, "validation CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (scene_build->parsed()) return cmd_scene_build(config_path, scene_path, out_prefix);
    if (solm_build_cmd->parsed())
      return cmd_solm_build(config_path, scene_path, lidar, out_file, threads, seed);
    if (solm_export_cmd->parsed()) return cmd_solm_export(solm_path, out_prefix, channel);
    if (metric_eval->parsed())
      return cmd_metric_eval(config_path, scene_path, lidar, pose_text, strategy, seed);
    if (mde_eval->parsed())
      return cmd_mde_eval(config_path, scene_path, lidar, pose_text, n, radius, seed, out_csv);
    if (plan_cmd->parsed())
      return cmd_plan(config_path, scene_path, lidar, solm_path, start_text, goal_text, rho_q,
                      baseline, out_prefix);
    if (validate_cmd->parsed())
      return cmd_validate(config_path, scene_path, lidar, traj_csv, interval, n, radius, seed,
                          out_csv);
    std::fprintf(stderr, "no subcommand given\n");
    return kExitUsage;
  } catch (const PlanningError& e) {
    std::fprintf(stderr, "planning error: %s\n", e.what());
    return kExitPlanning;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
}
