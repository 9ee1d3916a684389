#pragma once

#include <Eigen/Core>

#include "solmplan/search.hpp"
#include "solmplan/sdf.hpp"
#include "solmplan/solm.hpp"
#include "solmplan/trajectory.hpp"

namespace solmplan {

enum class RobotKind { kOmnidirectional, kNonholonomic };

struct OptParams {
  double rho_T = 20.0;  // time weight in the objective
  double w_loss = 1.0;  // scale on the interpolated observation loss

  // dynamic feasibility (body frame) and safety
  double v_mlon = 1.0;   // [m/s]
  double v_mlat = 1.0;   // [m/s]
  double w_max = 1.5;    // [rad/s]
  double r_safe = 0.3;   // [m]
  double w_dyn = 1e5;    // cubic-hinge weight, dynamics
  double w_safe = 1e5;   // cubic-hinge weight, safety

  int kappa = 8;  // quadrature samples per segment

  // PHR augmented Lagrangian (nonholonomic equality only)
  double alm_multiplier0 = 0.0;
  double alm_rho0 = 1.0;
  double alm_gamma = 10.0;
  double alm_rho_cap = 1e5;
  double alm_tol = 1e-4;
  int alm_max_outer = 15;

  // inner quasi-Newton solver
  int lbfgs_memory = 8;
  int lbfgs_max_iterations = 500;
  double lbfgs_grad_tol = 1e-6;

  RobotKind robot = RobotKind::kOmnidirectional;

  // initialization
  int max_waypoints = 30;     // waypoint count cap for path downsampling
  double v_avg = 0.6;         // [m/s] initial time allocation
  double l_yaw = 0.5;         // [m/rad] yaw-to-length conversion
  double min_duration = 0.05;  // [s] floor per segment

  void validate() const;
};

struct OptReport {
  bool line_search_warning = false;
  bool infeasible_start = false;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double objective = 0.0;
  double max_nonholonomic_residual = 0.0;
};

// Waypoints from downsampled path centers, theta unwrapped along the path,
// durations from segment length at v_avg. Throws on single-cell paths.
CubicSplineTraj init_from_path(const GridPath& path, const OptParams& params);

// Minimizes integrated observation loss + rho_T * total time over interior
// waypoints and log-duration surrogates, with cubic-hinge penalties for
// dynamics and safety; the nonholonomic equality runs through a PHR
// augmented-Lagrangian outer loop when enabled.
CubicSplineTraj optimize(const CubicSplineTraj& init, const SolmGrid& solm, const SdfField& sdf,
                         const OptParams& params, OptReport* report = nullptr);

// Inner objective and analytic gradient at a raw decision vector; exposed so
// tests can difference it. Layout: [interior waypoints row-major | log T].
double objective_with_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad,
                               const CubicSplineTraj& ref, const SolmGrid& solm,
                               const SdfField& sdf, const OptParams& params,
                               const Eigen::VectorXd& alm_lambda, double alm_rho);

Eigen::VectorXd pack_decision(const CubicSplineTraj& traj);
CubicSplineTraj unpack_decision(const Eigen::VectorXd& x, const CubicSplineTraj& ref);

}  // namespace solmplan
