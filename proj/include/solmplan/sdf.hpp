#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "solmplan/scene.hpp"

namespace solmplan {

// Exact Euclidean signed distance over a 2-D occupancy grid.
// Positive in free space (distance to nearest occupied cell center),
// negative on occupied cells (distance to nearest free cell center).
struct SdfField {
  Eigen::Vector2d origin{0.0, 0.0};
  double resolution = 0.1;
  int width = 0, height = 0;
  std::vector<double> values;  // [m], row-major x fastest
  double cap = 0.0;

  double at(int i, int j) const { return values[static_cast<std::size_t>(j) * width + i]; }
};

struct SdfSample {
  double d = 0.0;
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
};

// Two-pass exact squared-Euclidean distance transform, both polarities.
// cap <= 0 defaults to the grid diagonal.
SdfField build_sdf(const OccupancyGrid2D& occ, double cap = 0.0);

// Bilinear value and analytic gradient of the interpolant; queries outside
// the field are clamped (zero gradient in the clamped axis).
SdfSample sample_sdf(const SdfField& field, const Eigen::Vector2d& xy);

// P5 graymap export for inspection.
void export_sdf_image(const SdfField& field, const std::string& path);

}  // namespace solmplan
