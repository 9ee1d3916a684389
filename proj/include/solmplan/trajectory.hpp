#pragma once

#include <Eigen/Core>
#include <vector>

#include "solmplan/se2.hpp"

namespace solmplan {

struct TrajPoint {
  Eigen::Vector3d state = Eigen::Vector3d::Zero();     // x, y, theta (unwrapped)
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d acceleration = Eigen::Vector3d::Zero();
  bool clamped = false;

  PlanarPose pose() const { return {state.x(), state.y(), state.z()}; }
};

// Piecewise cubic (x, y, theta) trajectory, C2 at interior knots by
// construction. theta is kept unwrapped; wrap only when forming poses.
class CubicSplineTraj {
 public:
  Eigen::MatrixX3d waypoints;     // (N+1) x 3
  Eigen::VectorXd durations;      // N, strictly positive
  Eigen::Vector3d start_velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d goal_velocity = Eigen::Vector3d::Zero();
  std::vector<Eigen::Matrix<double, 4, 3>> coeffs;  // rows c0..c3 per segment

  int segments() const { return static_cast<int>(durations.size()); }
  double total_duration() const { return durations.sum(); }
  TrajPoint evaluate(double t) const;
};

// Clamped C2 cubic through the waypoints: end velocities fixed, interior
// knot velocities from the acceleration-continuity tridiagonal system.
CubicSplineTraj build_clamped_spline(const Eigen::MatrixX3d& waypoints,
                                     const Eigen::VectorXd& durations,
                                     const Eigen::Vector3d& v_start,
                                     const Eigen::Vector3d& v_goal);

}  // namespace solmplan
