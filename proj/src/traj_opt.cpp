#include "solmplan/traj_opt.hpp"

#include <cmath>
#include <stdexcept>

#include "solmplan/lbfgs.hpp"

namespace solmplan {

void OptParams::validate() const {
  if (kappa < 4) throw std::invalid_argument("kappa must be >= 4");
  if (!(v_mlon > 0.0 && v_mlat > 0.0 && w_max > 0.0))
    throw std::invalid_argument("velocity limits must be positive");
  if (!(rho_T > 0.0)) throw std::invalid_argument("rho_T must be positive");
  if (max_waypoints < 2) throw std::invalid_argument("max_waypoints must be >= 2");
}

CubicSplineTraj init_from_path(const GridPath& path, const OptParams& params) {
  params.validate();
  if (path.poses.size() < 2) throw std::invalid_argument("path has fewer than 2 cells");

  // stride so the waypoint count stays bounded; always keep the endpoints
  const int m = static_cast<int>(path.poses.size());
  const int stride = std::max(1, (m - 2 + params.max_waypoints - 1) / (params.max_waypoints - 1));
  std::vector<int> picks;
  for (int i = 0; i < m - 1; i += stride) picks.push_back(i);
  picks.push_back(m - 1);

  Eigen::MatrixX3d wp(static_cast<Eigen::Index>(picks.size()), 3);
  double theta = path.poses[picks[0]].theta;
  for (std::size_t r = 0; r < picks.size(); ++r) {
    const PlanarPose& p = path.poses[picks[r]];
    theta += wrap_angle(p.theta - theta);  // unwrap along the path
    wp(static_cast<Eigen::Index>(r), 0) = p.x;
    wp(static_cast<Eigen::Index>(r), 1) = p.y;
    wp(static_cast<Eigen::Index>(r), 2) = theta;
  }
  if (params.robot == RobotKind::kNonholonomic && picks.size() > 2) {
    // interior headings aligned with the direction of travel; a grid path
    // carries no usable yaw when the map has a single yaw channel
    double prev = wp(0, 2);
    for (Eigen::Index r = 1; r + 1 < wp.rows(); ++r) {
      const double dx = wp(r + 1, 0) - wp(r - 1, 0);
      const double dy = wp(r + 1, 1) - wp(r - 1, 1);
      if (dx * dx + dy * dy > 1e-12) {
        wp(r, 2) = prev + wrap_angle(std::atan2(dy, dx) - prev);
      } else {
        wp(r, 2) = prev;
      }
      prev = wp(r, 2);
    }
    wp(wp.rows() - 1, 2) = prev + wrap_angle(wp(wp.rows() - 1, 2) - prev);
  }

  const int n = static_cast<int>(picks.size()) - 1;
  Eigen::VectorXd durations(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::RowVector3d d = wp.row(i + 1) - wp.row(i);
    const double len = std::sqrt(d.x() * d.x() + d.y() * d.y() +
                                 params.l_yaw * params.l_yaw * d.z() * d.z());
    durations[i] = std::max(params.min_duration, len / params.v_avg);
  }
  return build_clamped_spline(wp, durations, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero());
}

Eigen::VectorXd pack_decision(const CubicSplineTraj& traj) {
  const int n = traj.segments();
  Eigen::VectorXd x(3 * (n - 1) + n);
  for (int i = 1; i < n; ++i) x.segment<3>(3 * (i - 1)) = traj.waypoints.row(i).transpose();
  for (int i = 0; i < n; ++i) x[3 * (n - 1) + i] = std::log(traj.durations[i]);
  return x;
}

CubicSplineTraj unpack_decision(const Eigen::VectorXd& x, const CubicSplineTraj& ref) {
  const int n = ref.segments();
  Eigen::MatrixX3d wp = ref.waypoints;
  for (int i = 1; i < n; ++i) wp.row(i) = x.segment<3>(3 * (i - 1)).transpose();
  Eigen::VectorXd durations(n);
  for (int i = 0; i < n; ++i) durations[i] = std::exp(x[3 * (n - 1) + i]);
  return build_clamped_spline(wp, durations, ref.start_velocity, ref.goal_velocity);
}

namespace {

// penalty back-off: hinge equilibria sit a few millimeters inside the
// stated limits instead of a few millimeters outside
constexpr double kLimitBackoff = 0.975;
constexpr double kSafetyBackoff = 0.04;

inline double hinge_cubed(double g, double& dpen_dg) {
  if (g <= 0.0) {
    dpen_dg = 0.0;
    return 0.0;
  }
  dpen_dg = 3.0 * g * g;
  return g * g * g;
}

struct SplineWorkspace {
  Eigen::MatrixX3d V;       // knot velocities
  Eigen::MatrixX3d dW;      // gradient wrt waypoints
  Eigen::MatrixX3d dV;      // gradient wrt knot velocities
  Eigen::VectorXd dT;       // gradient wrt durations
  std::vector<Eigen::Matrix<double, 4, 3>> dC;  // gradient wrt coefficients
};

// Thomas solve of the symmetric tridiagonal continuity system.
void solve_tridiagonal(const Eigen::VectorXd& lower, const Eigen::VectorXd& diag,
                       const Eigen::VectorXd& upper, Eigen::MatrixX3d& rhs) {
  const int m = static_cast<int>(diag.size());
  Eigen::VectorXd cp(m);
  cp[0] = upper[0] / diag[0];
  rhs.row(0) /= diag[0];
  for (int i = 1; i < m; ++i) {
    const double denom = diag[i] - lower[i] * cp[i - 1];
    cp[i] = upper[i] / denom;
    rhs.row(i) = (rhs.row(i) - lower[i] * rhs.row(i - 1)) / denom;
  }
  for (int i = m - 2; i >= 0; --i) rhs.row(i) -= cp[i] * rhs.row(i + 1);
}

}  // namespace

double objective_with_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad,
                               const CubicSplineTraj& ref, const SolmGrid& solm,
                               const SdfField& sdf, const OptParams& p,
                               const Eigen::VectorXd& alm_lambda, double alm_rho) {
  const int n = ref.segments();
  const int m_int = n - 1;
  const CubicSplineTraj traj = unpack_decision(x, ref);
  const bool nonholo = p.robot == RobotKind::kNonholonomic;

  SplineWorkspace ws;
  ws.dW = Eigen::MatrixX3d::Zero(n + 1, 3);
  ws.dV = Eigen::MatrixX3d::Zero(n + 1, 3);
  ws.dT = Eigen::VectorXd::Zero(n);
  ws.dC.assign(n, Eigen::Matrix<double, 4, 3>::Zero());

  double J = 0.0;

  // composite trapezoid over kappa+1 samples per segment; sampling the
  // knots keeps velocity penalties active where the spline peaks
  for (int i = 0; i < n; ++i) {
    const double T = traj.durations[i];
    const auto& c = traj.coeffs[i];
    auto& gc = ws.dC[i];
    for (int samp = 0; samp <= p.kappa; ++samp) {
      const double frac = static_cast<double>(samp) / p.kappa;
      const bool end = samp == 0 || samp == p.kappa;
      const double dt = end ? 0.5 * T / p.kappa : T / p.kappa;
      const double s = frac * T;
      const double s2 = s * s, s3 = s2 * s;
      const Eigen::Vector3d pos =
          (c.row(0) + s * c.row(1) + s2 * c.row(2) + s3 * c.row(3)).transpose();
      const Eigen::Vector3d vel =
          (c.row(1) + 2.0 * s * c.row(2) + 3.0 * s2 * c.row(3)).transpose();
      const Eigen::Vector3d acc = (2.0 * c.row(2) + 6.0 * s * c.row(3)).transpose();

      Eigen::Vector3d dc_dpos = Eigen::Vector3d::Zero();  // weighted by dt below
      Eigen::Vector3d dc_dvel = Eigen::Vector3d::Zero();
      double cost = 0.0;

      // observation loss
      if (p.w_loss != 0.0) {
        const SolmSample qs = interpolate(solm, {pos.x(), pos.y(), pos.z()});
        cost += p.w_loss * qs.q;
        dc_dpos += p.w_loss * qs.grad;
      }
      // safety hinge on the backed-off clearance
      {
        const SdfSample ds = sample_sdf(sdf, pos.head<2>());
        double dpen;
        cost += p.w_safe * hinge_cubed(p.r_safe + kSafetyBackoff - ds.d, dpen);
        dc_dpos.head<2>() -= p.w_safe * dpen * ds.grad;
      }
      // body-frame dynamic feasibility hinges, against internally
      // tightened limits so the penalty equilibrium stays feasible
      const double ct = std::cos(pos.z()), st = std::sin(pos.z());
      const double v_lon = ct * vel.x() + st * vel.y();
      const double v_lat = -st * vel.x() + ct * vel.y();
      {
        const double lon_lim = kLimitBackoff * p.v_mlon;
        const double lat_lim = kLimitBackoff * p.v_mlat;
        const double w_lim = kLimitBackoff * p.w_max;
        double dp1, dp2, dp3;
        cost += p.w_dyn * hinge_cubed(v_lon * v_lon - lon_lim * lon_lim, dp1);
        cost += p.w_dyn * hinge_cubed(v_lat * v_lat - lat_lim * lat_lim, dp2);
        cost += p.w_dyn * hinge_cubed(vel.z() * vel.z() - w_lim * w_lim, dp3);
        const double a_lon = p.w_dyn * dp1 * 2.0 * v_lon;
        const double a_lat = p.w_dyn * dp2 * 2.0 * v_lat;
        dc_dvel.x() += a_lon * ct - a_lat * st;
        dc_dvel.y() += a_lon * st + a_lat * ct;
        dc_dvel.z() += p.w_dyn * dp3 * 2.0 * vel.z();
        // dv_lon/dtheta = v_lat, dv_lat/dtheta = -v_lon
        dc_dpos.z() += a_lon * v_lat - a_lat * v_lon;
      }

      J += dt * cost;

      // per-sample equality terms (not quadrature-weighted)
      Eigen::Vector3d da_dpos = Eigen::Vector3d::Zero();
      Eigen::Vector3d da_dvel = Eigen::Vector3d::Zero();
      if (nonholo) {
        const double g = vel.x() * st - vel.y() * ct;
        const double lam = alm_lambda[static_cast<Eigen::Index>(i) * (p.kappa + 1) + samp];
        J += lam * g + 0.5 * alm_rho * g * g;
        const double w = lam + alm_rho * g;
        da_dvel.x() += w * st;
        da_dvel.y() -= w * ct;
        da_dpos.z() += w * (vel.x() * ct + vel.y() * st);
      }

      const Eigen::Vector3d gpos = dt * dc_dpos + da_dpos;
      const Eigen::Vector3d gvel = dt * dc_dvel + da_dvel;
      const double spow[4] = {1.0, s, s2, s3};
      const double dpow[4] = {0.0, 1.0, 2.0 * s, 3.0 * s2};
      for (int k = 0; k < 4; ++k)
        gc.row(k) += (spow[k] * gpos + dpow[k] * gvel).transpose();
      // dt and sample position both move with T
      ws.dT[i] += cost * (end ? 0.5 : 1.0) / p.kappa;
      ws.dT[i] += (gpos.dot(vel) + gvel.dot(acc)) * frac;
    }
    J += p.rho_T * T;
    ws.dT[i] += p.rho_T;
  }

  // coefficients -> waypoints, knot velocities, durations
  ws.V.resize(n + 1, 3);
  ws.V.row(0) = traj.start_velocity;
  ws.V.row(n) = traj.goal_velocity;
  for (int i = 0; i < n; ++i) {
    // c1 row stores V_i exactly
    ws.V.row(i) = traj.coeffs[i].row(1);
  }
  for (int i = 0; i < n; ++i) {
    const double T = traj.durations[i];
    const Eigen::RowVector3d d = traj.waypoints.row(i + 1) - traj.waypoints.row(i);
    const Eigen::RowVector3d v0 = ws.V.row(i), v1 = ws.V.row(i + 1);
    const auto& g = ws.dC[i];
    const double T2 = T * T, T3 = T2 * T, T4 = T3 * T;
    ws.dW.row(i) += g.row(0);
    ws.dV.row(i) += g.row(1);

    ws.dW.row(i + 1) += 3.0 / T2 * g.row(2);
    ws.dW.row(i) -= 3.0 / T2 * g.row(2);
    ws.dV.row(i) += -2.0 / T * g.row(2);
    ws.dV.row(i + 1) += -1.0 / T * g.row(2);
    ws.dT[i] += g.row(2).dot(-6.0 * d / T3 + (2.0 * v0 + v1) / T2);

    ws.dW.row(i + 1) += -2.0 / T3 * g.row(3);
    ws.dW.row(i) += 2.0 / T3 * g.row(3);
    ws.dV.row(i) += 1.0 / T2 * g.row(3);
    ws.dV.row(i + 1) += 1.0 / T2 * g.row(3);
    ws.dT[i] += g.row(3).dot(6.0 * d / T4 - 2.0 * (v0 + v1) / T3);
  }

  // adjoint of the tridiagonal solve for the interior knot velocities
  if (m_int > 0) {
    Eigen::VectorXd lower(m_int), diag(m_int), upper(m_int);
    for (int i = 1; i <= m_int; ++i) {
      const double ti = traj.durations[i - 1], tn = traj.durations[i];
      diag[i - 1] = 2.0 * (1.0 / ti + 1.0 / tn);
      lower[i - 1] = 1.0 / ti;
      upper[i - 1] = 1.0 / tn;
    }
    Eigen::MatrixX3d lambda = ws.dV.middleRows(1, m_int);
    solve_tridiagonal(lower, diag, upper, lambda);  // M is symmetric

    for (int i = 1; i <= m_int; ++i) {
      const double ti = traj.durations[i - 1], tn = traj.durations[i];
      const Eigen::RowVector3d lam = lambda.row(i - 1);
      const Eigen::RowVector3d di = traj.waypoints.row(i) - traj.waypoints.row(i - 1);
      const Eigen::RowVector3d dn = traj.waypoints.row(i + 1) - traj.waypoints.row(i);
      // rhs dependence on waypoints
      ws.dW.row(i) += 3.0 / (ti * ti) * lam;
      ws.dW.row(i - 1) -= 3.0 / (ti * ti) * lam;
      ws.dW.row(i + 1) += 3.0 / (tn * tn) * lam;
      ws.dW.row(i) -= 3.0 / (tn * tn) * lam;
      // rhs dependence on durations
      ws.dT[i - 1] += lam.dot(-6.0 * di / (ti * ti * ti));
      ws.dT[i] += lam.dot(-6.0 * dn / (tn * tn * tn));
      if (i == 1) ws.dT[0] += lam.dot(traj.start_velocity) / (ti * ti);
      if (i == m_int) ws.dT[n - 1] += lam.dot(traj.goal_velocity) / (tn * tn);
      // matrix dependence on durations: -lam' dM/dT V_int
      const Eigen::RowVector3d vi = ws.V.row(i);
      ws.dT[i - 1] += 2.0 / (ti * ti) * lam.dot(vi);
      ws.dT[i] += 2.0 / (tn * tn) * lam.dot(vi);
      if (i >= 2) ws.dT[i - 1] += 1.0 / (ti * ti) * lam.dot(ws.V.row(i - 1));
      if (i <= m_int - 1) ws.dT[i] += 1.0 / (tn * tn) * lam.dot(ws.V.row(i + 1));
    }
  }

  grad.resize(x.size());
  for (int i = 1; i < n; ++i) grad.segment<3>(3 * (i - 1)) = ws.dW.row(i).transpose();
  for (int i = 0; i < n; ++i) grad[3 * (n - 1) + i] = ws.dT[i] * traj.durations[i];
  return J;
}

namespace {

double max_nonholonomic_residual(const CubicSplineTraj& traj, int kappa,
                                 Eigen::VectorXd* residuals = nullptr) {
  const int n = traj.segments();
  if (residuals) residuals->resize(static_cast<Eigen::Index>(n) * (kappa + 1));
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& c = traj.coeffs[i];
    const double T = traj.durations[i];
    for (int samp = 0; samp <= kappa; ++samp) {
      const double s = static_cast<double>(samp) / kappa * T;
      const Eigen::Vector3d state =
          (c.row(0) + s * c.row(1) + s * s * c.row(2) + s * s * s * c.row(3)).transpose();
      const Eigen::Vector3d vel =
          (c.row(1) + 2.0 * s * c.row(2) + 3.0 * s * s * c.row(3)).transpose();
      const double g = vel.x() * std::sin(state.z()) - vel.y() * std::cos(state.z());
      if (residuals) (*residuals)[static_cast<Eigen::Index>(i) * (kappa + 1) + samp] = g;
      worst = std::max(worst, std::abs(g));
    }
  }
  return worst;
}

}  // namespace

CubicSplineTraj optimize(const CubicSplineTraj& init, const SolmGrid& solm, const SdfField& sdf,
                         const OptParams& p, OptReport* report) {
  p.validate();
  const int n = init.segments();
  const bool nonholo = p.robot == RobotKind::kNonholonomic;

  OptReport rep;
  // flag initializations that already touch sentinel cells
  const double finite_ceiling = solm.surrogate() / 10.0;
  for (int i = 0; i <= 4 * n; ++i) {
    const TrajPoint pt = init.evaluate(init.total_duration() * i / (4.0 * n));
    if (interpolate(solm, pt.pose()).q > finite_ceiling + 1e-12) {
      rep.infeasible_start = true;
      break;
    }
  }

  Eigen::VectorXd x = pack_decision(init);
  Eigen::VectorXd lambda = Eigen::VectorXd::Constant(
      static_cast<Eigen::Index>(n) * (p.kappa + 1), nonholo ? p.alm_multiplier0 : 0.0);
  double rho = p.alm_rho0;

  lbfgs::Params lp;
  lp.memory = p.lbfgs_memory;
  lp.max_iterations = p.lbfgs_max_iterations;
  lp.grad_tol = p.lbfgs_grad_tol;

  double prev_violation = std::numeric_limits<double>::infinity();
  double fx = 0.0;
  const int outer_count = nonholo ? p.alm_max_outer : 1;
  for (int outer = 0; outer < outer_count; ++outer) {
    auto fn = [&](const Eigen::VectorXd& xv, Eigen::VectorXd& g) {
      return objective_with_gradient(xv, g, init, solm, sdf, p, lambda, nonholo ? rho : 0.0);
    };
    const lbfgs::Result r = lbfgs::minimize(fn, x, lp);
    fx = r.fx;
    rep.line_search_warning = rep.line_search_warning || r.line_search_failed;
    rep.inner_iterations += r.iterations;
    rep.outer_iterations = outer + 1;
    if (!nonholo) break;

    Eigen::VectorXd residuals;
    const CubicSplineTraj cur = unpack_decision(x, init);
    const double violation = max_nonholonomic_residual(cur, p.kappa, &residuals);
    rep.max_nonholonomic_residual = violation;
    if (violation <= p.alm_tol) break;
    lambda += rho * residuals;
    if (violation > 0.25 * prev_violation) rho = std::min(rho * p.alm_gamma, p.alm_rho_cap);
    prev_violation = violation;
  }

  CubicSplineTraj out = unpack_decision(x, init);
  rep.objective = fx;
  if (nonholo) rep.max_nonholonomic_residual = max_nonholonomic_residual(out, p.kappa);
  if (report) *report = rep;
  return out;
}

}  // namespace solmplan
