#pragma once

#include <cstdint>
#include <string>

#include "solmplan/metric.hpp"
#include "solmplan/observation.hpp"
#include "solmplan/registration.hpp"
#include "solmplan/scan_sim.hpp"
#include "solmplan/scene.hpp"
#include "solmplan/search.hpp"
#include "solmplan/traj_opt.hpp"

namespace solmplan {

// Everything a run needs, with documented defaults; unknown keys rejected.
struct RunConfig {
  std::string scene_path;
  std::string lidar_preset = "spin-360";
  LidarModel lidar = LidarModel::spin360();
  MetricConfig metric;
  ObservationParams observation;
  SceneBuildParams scene_build;
  double grid_rx = 0.25, grid_ry = 0.25;
  int grid_c = 8;
  SearchWeights planner;
  OptParams optimizer;
  MdeParams mde;
  double validate_interval = 0.5;  // [s] between validation poses
  std::uint64_t seed = 1;
  int threads = 1;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

}  // namespace solmplan
