#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "solmplan/scene.hpp"
#include "solmplan/se2.hpp"

namespace solmplan {

struct LidarModel {
  double hfov_deg = 360.0;  // horizontal field of view, (0, 360]
  double vfov_deg = 30.0;   // vertical field of view, (0, 360]
  int azimuth_count = 360;
  int elevation_count = 16;
  double max_range = 40.0;       // [m]
  double min_range = 0.05;       // [m]
  double sigma_r = 0.01;         // range noise stddev [m]
  double mount_height = 0.5;     // sensor origin above ground [m]

  void validate() const;

  // Shipped presets, selectable by name in the config file.
  static LidarModel mid70_like();
  static LidarModel spin360();
  static LidarModel by_name(const std::string& name);
};

struct RayHit {
  double distance = 0.0;
  int triangle = -1;
};

struct Scan {
  std::vector<Eigen::Vector3d> points;  // sensor frame, noisy range applied
  std::vector<double> true_ranges;
  std::vector<int> triangle_ids;  // hit triangle per point (mesh-plane association)

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

// Immutable BVH over a triangle mesh; safe for concurrent queries.
class ScanSimulator {
 public:
  explicit ScanSimulator(const TriangleMesh& mesh);

  // Nearest positive intersection within max_dist, or nullopt.
  std::optional<RayHit> cast_ray(const Eigen::Vector3d& origin, const Eigen::Vector3d& direction,
                                 double max_dist = 1e300) const;

  const TriangleMesh& mesh() const { return *mesh_; }

 private:
  struct Node {
    Eigen::Vector3d lo, hi;
    int left = -1, right = -1;
    int begin = 0, end = 0;
    bool leaf = false;
  };

  int build(int begin, int end);
  bool intersect_triangle(int tri, const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                          double& t) const;

  const TriangleMesh* mesh_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  std::vector<Eigen::Vector3d> centroids_;
  int root_ = -1;
};

// Rays on a regular azimuth x elevation grid centered on the robot yaw.
// Deterministic given the seed; out-of-range returns are dropped.
Scan simulate_scan(const ScanSimulator& sim, const PlanarPose& pose, const LidarModel& model,
                   std::uint64_t seed);

}  // namespace solmplan
