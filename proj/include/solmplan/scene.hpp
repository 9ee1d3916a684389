#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "solmplan/kdtree.hpp"

namespace solmplan {

enum class PrimitiveKind { kBox, kWall, kGroundPlane, kHeightfield };

// One declarative world element. Dimensions are full extents in meters.
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::kBox;
  double x = 0.0, y = 0.0;  // placement (center)
  double yaw = 0.0;
  double sx = 1.0, sy = 1.0, sz = 1.0;  // box extents; wall: length/thickness/height
  // heightfield only
  int grid = 65;             // vertices per side
  double amplitude = 0.08;   // [m]
  double corr_length = 0.5;  // [m]
  std::uint64_t seed = 0;
};

struct SceneDescription {
  std::string name;
  std::vector<Primitive> primitives;
};

struct TriangleMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> triangles;

  double total_area() const;
  void xy_bounds(Eigen::Vector2d& lo, Eigen::Vector2d& hi) const;
};

// Prior map the robot localizes against: surface samples plus a k-NN index.
struct MapCloud {
  KdTree3 index;  // owns the points

  const std::vector<Eigen::Vector3d>& points() const { return index.points(); }
  std::size_t size() const { return index.points().size(); }
};

struct OccupancyGrid2D {
  Eigen::Vector2d origin{0.0, 0.0};  // min corner [m]
  double resolution = 0.1;           // [m/cell]
  int width = 0, height = 0;
  std::vector<std::uint8_t> occupied;  // row-major, x fastest

  bool at(int i, int j) const { return occupied[static_cast<std::size_t>(j) * width + i] != 0; }
  Eigen::Vector2d cell_center(int i, int j) const {
    return origin + resolution * Eigen::Vector2d(i + 0.5, j + 0.5);
  }
  bool world_to_cell(const Eigen::Vector2d& p, int& i, int& j) const;
};

// Everything downstream consumers need, compiled once and then immutable.
struct SceneModel {
  SceneDescription description;
  TriangleMesh mesh;
  MapCloud map;
  OccupancyGrid2D occupancy;
};

struct SceneBuildParams {
  double map_density = 2000.0;  // surface samples per m^2
  std::uint64_t map_seed = 1;
  double occ_resolution = 0.1;
  double z_band_lo = 0.1;  // robot height band for the obstacle mask
  double z_band_hi = 1.0;
};

// Deterministic compilation: identical description -> identical mesh bytes.
TriangleMesh compile_scene(const SceneDescription& desc);

// Area-weighted uniform surface sampling; point count = round(density * area).
MapCloud sample_map_cloud(const TriangleMesh& mesh, double density, std::uint64_t seed);

// Cell occupied iff some triangle intersects the cell column within [z_lo, z_hi].
OccupancyGrid2D rasterize_occupancy(const TriangleMesh& mesh, double resolution, double z_lo,
                                    double z_hi);

SceneModel build_scene_model(const SceneDescription& desc, const SceneBuildParams& params = {});

// Scene description file I/O (JSON; unknown keys rejected).
SceneDescription load_scene_description(const std::string& path);
SceneDescription parse_scene_description(const std::string& json_text);

// Closed triangle/AABB overlap (separating axis test), shared by the rasterizer.
bool triangle_aabb_overlap(const Eigen::Vector3d& v0, const Eigen::Vector3d& v1,
                           const Eigen::Vector3d& v2, const Eigen::Vector3d& box_center,
                           const Eigen::Vector3d& box_half);

}  // namespace solmplan
