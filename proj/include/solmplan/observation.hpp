#pragma once

#include <Eigen/Core>
#include <vector>

#include "solmplan/scan_sim.hpp"
#include "solmplan/scene.hpp"
#include "solmplan/se2.hpp"

namespace solmplan {

struct PlaneFit {
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();  // unit when valid
  Eigen::Vector3d anchor = Eigen::Vector3d::Zero();
  bool valid = false;
  double max_residual = 0.0;  // worst point-to-plane distance of the fit
};

enum class Association { kKnnFit, kMeshPlane };

struct ObservationParams {
  int k = 5;               // neighbors per plane fit
  double d_thresh = 0.1;   // fit validity threshold [m]
  Association association = Association::kKnnFit;
};

// The linearized point-to-plane system at one pose.
// Row j of A is [u_x, u_y, u_xy' * R'(theta) * p_xy]; b_j = -h_j.
struct ObservationSet {
  Eigen::MatrixX3d A;
  Eigen::VectorXd b;
  int m = 0;
  PlanarPose pose;

  bool empty() const { return m == 0; }
};

// Total-least-squares plane through the centroid; valid iff the neighborhood
// is non-degenerate and every neighbor is within d_thresh of the plane.
PlaneFit fit_plane(const std::vector<Eigen::Vector3d>& neighbors, double d_thresh);

// mesh is only consulted for Association::kMeshPlane.
ObservationSet build_observations(const Scan& scan, const MapCloud& map, const PlanarPose& pose,
                                  const ObservationParams& params, double mount_height,
                                  const TriangleMesh* mesh = nullptr);

}  // namespace solmplan
