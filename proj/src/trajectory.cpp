#include "solmplan/trajectory.hpp"

#include <cmath>
#include <stdexcept>

namespace solmplan {

TrajPoint CubicSplineTraj::evaluate(double t) const {
  TrajPoint out;
  const int n = segments();
  if (n == 0) throw std::logic_error("empty trajectory");
  double t_clamped = t;
  const double total = total_duration();
  if (t < 0.0) {
    t_clamped = 0.0;
    out.clamped = true;
  } else if (t > total) {
    t_clamped = total;
    out.clamped = true;
  }
  int seg = 0;
  double s = t_clamped;
  while (seg + 1 < n && s > durations[seg]) {
    s -= durations[seg];
    ++seg;
  }
  s = std::min(s, durations[seg]);
  const auto& c = coeffs[seg];
  const double s2 = s * s, s3 = s2 * s;
  out.state = c.row(0) + s * c.row(1) + s2 * c.row(2) + s3 * c.row(3);
  out.velocity = c.row(1) + 2.0 * s * c.row(2) + 3.0 * s2 * c.row(3);
  out.acceleration = 2.0 * c.row(2) + 6.0 * s * c.row(3);
  return out;
}

CubicSplineTraj build_clamped_spline(const Eigen::MatrixX3d& waypoints,
                                     const Eigen::VectorXd& durations,
                                     const Eigen::Vector3d& v_start,
                                     const Eigen::Vector3d& v_goal) {
  const int n = static_cast<int>(durations.size());
  if (n < 1 || waypoints.rows() != n + 1)
    throw std::invalid_argument("need N durations and N+1 waypoints, N >= 1");
  for (int i = 0; i < n; ++i)
    if (!(durations[i] > 0.0)) throw std::invalid_argument("durations must be > 0");

  // knot velocities: ends clamped, interior from acceleration continuity
  //   (1/T_i) V_{i-1} + 2(1/T_i + 1/T_{i+1}) V_i + (1/T_{i+1}) V_{i+1}
  //     = 3 (D_i / T_i^2 + D_{i+1} / T_{i+1}^2)
  Eigen::MatrixX3d V(n + 1, 3);
  V.row(0) = v_start;
  V.row(n) = v_goal;
  if (n > 1) {
    const int m = n - 1;
    Eigen::VectorXd diag(m), lower(m), upper(m);
    Eigen::MatrixX3d rhs(m, 3);
    for (int i = 1; i <= m; ++i) {
      const double ti = durations[i - 1], tn = durations[i];
      diag[i - 1] = 2.0 * (1.0 / ti + 1.0 / tn);
      lower[i - 1] = 1.0 / ti;
      upper[i - 1] = 1.0 / tn;
      rhs.row(i - 1) = 3.0 * ((waypoints.row(i) - waypoints.row(i - 1)) / (ti * ti) +
                              (waypoints.row(i + 1) - waypoints.row(i)) / (tn * tn));
    }
    rhs.row(0) -= lower[0] * V.row(0);
    rhs.row(m - 1) -= upper[m - 1] * V.row(n);
    // Thomas algorithm
    Eigen::VectorXd cp(m);
    Eigen::MatrixX3d dp(m, 3);
    cp[0] = upper[0] / diag[0];
    dp.row(0) = rhs.row(0) / diag[0];
    for (int i = 1; i < m; ++i) {
      const double denom = diag[i] - lower[i] * cp[i - 1];
      cp[i] = upper[i] / denom;
      dp.row(i) = (rhs.row(i) - lower[i] * dp.row(i - 1)) / denom;
    }
    V.row(m) = dp.row(m - 1);
    for (int i = m - 2; i >= 0; --i) V.row(i + 1) = dp.row(i) - cp[i] * V.row(i + 2);
  }

  CubicSplineTraj traj;
  traj.waypoints = waypoints;
  traj.durations = durations;
  traj.start_velocity = v_start;
  traj.goal_velocity = v_goal;
  traj.coeffs.resize(n);
  for (int i = 0; i < n; ++i) {
    const double T = durations[i];
    const Eigen::RowVector3d p0 = waypoints.row(i), p1 = waypoints.row(i + 1);
    const Eigen::RowVector3d v0 = V.row(i), v1 = V.row(i + 1);
    const Eigen::RowVector3d d = p1 - p0;
    auto& c = traj.coeffs[i];
    c.row(0) = p0;
    c.row(1) = v0;
    c.row(2) = 3.0 * d / (T * T) - (2.0 * v0 + v1) / T;
    c.row(3) = -2.0 * d / (T * T * T) + (v0 + v1) / (T * T);
  }
  return traj;
}

}  // namespace solmplan
