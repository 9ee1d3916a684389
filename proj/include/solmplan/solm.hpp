#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "solmplan/metric.hpp"
#include "solmplan/observation.hpp"
#include "solmplan/scan_sim.hpp"
#include "solmplan/scene.hpp"
#include "solmplan/sdf.hpp"
#include "solmplan/se2.hpp"

namespace solmplan {

struct SolmGridSpec {
  Eigen::Vector2d origin{0.0, 0.0};  // min corner of the xy extent [m]
  double rx = 0.25, ry = 0.25;       // cell sizes [m]
  int a = 1, b = 1;                  // x, y dims
  int c = 8;                         // yaw channels; r_theta = 2*pi / c

  double rtheta() const { return 2.0 * kPi / c; }
};

// Loss values over the discretized (x, y, theta) state space.
// Storage is row-major x-fastest with theta as the outermost channel.
// Obstacle cells and degenerate evaluations hold quiet-NaN; the obstacle
// mask distinguishes the two.
class SolmGrid {
 public:
  SolmGridSpec spec;
  std::vector<float> values;          // a*b*c, NaN = sentinel
  std::vector<std::uint8_t> obstacle;  // a*b (xy footprint), 1 = obstacle
  std::uint64_t config_digest = 0;

  std::size_t linear_index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * spec.b + j) * spec.a + i;
  }
  float value(int i, int j, int k) const { return values[linear_index(i, j, k)]; }
  bool is_obstacle(int i, int j) const {
    return obstacle[static_cast<std::size_t>(j) * spec.a + i] != 0;
  }
  PlanarPose cell_center(int i, int j, int k) const {
    return {spec.origin.x() + (i + 0.5) * spec.rx, spec.origin.y() + (j + 0.5) * spec.ry,
            -kPi + (k + 0.5) * spec.rtheta()};
  }
  bool pose_to_cell(const PlanarPose& p, int& i, int& j, int& k) const;

  // Large finite stand-in for sentinel cells (10x the largest finite loss).
  double surrogate() const { return surrogate_; }
  double cell_cost(int i, int j, int k) const {
    const float v = value(i, j, k);
    return std::isnan(v) ? surrogate_ : static_cast<double>(v);
  }
  void refresh_surrogate();

 private:
  double surrogate_ = 1.0;
};

struct SolmSample {
  double q = 0.0;
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();  // d q / d(x, y, theta)
};

struct SolmBuildParams {
  SolmGridSpec grid;
  LidarModel lidar;
  MetricConfig metric;
  ObservationParams observation;
  double r_safe = 0.3;  // cells closer to obstacles than this get the sentinel
  std::uint64_t seed = 1;
  int workers = 1;
};

// Evaluates the metric at every free cell center (per-cell seed mixed from
// the cell index, so results are independent of the worker count).
SolmGrid build_solm(const SceneModel& scene, const SolmBuildParams& params);

// Binary persistence; lossless and byte-stable across re-saves.
void save_solm(const SolmGrid& grid, const std::string& path);
SolmGrid load_solm(const std::string& path);

// 8-bit P5 graymap of one yaw channel: obstacles black, smaller loss brighter.
void export_solm_image(const SolmGrid& grid, int channel, const std::string& path);

// Trilinear interpolation with circular wrap on theta; xy clamped at the
// border (zero gradient in the clamped axis). Sentinels participate with
// the surrogate value.
SolmSample interpolate(const SolmGrid& grid, const PlanarPose& pose);

// Derives a grid spec covering the scene footprint at the given resolutions.
SolmGridSpec grid_spec_for_scene(const SceneModel& scene, double rx, double ry, int c);

std::uint64_t solm_config_digest(const SolmBuildParams& params);

}  // namespace solmplan
