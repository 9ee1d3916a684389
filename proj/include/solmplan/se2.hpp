#pragma once

#include <Eigen/Core>
#include <cmath>

namespace solmplan {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Characteristic length [m] used whenever a rotation has to be mixed with a
// translation in one norm (twist norms, disturbance balls, yaw path length).
inline constexpr double kYawLength = 1.0;

// Normalize to the half-open interval [-pi, pi); +pi maps to -pi so that
// grid indexing over yaw channels is unambiguous.
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a >= kPi) a -= 2.0 * kPi;
  if (a < -kPi) a += 2.0 * kPi;
  return a;
}

struct PlanarPose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // always in [-pi, pi)

  PlanarPose() = default;
  PlanarPose(double px, double py, double ptheta) : x(px), y(py), theta(wrap_angle(ptheta)) {}

  Eigen::Vector2d translation() const { return {x, y}; }

  Eigen::Matrix2d rotation() const {
    const double c = std::cos(theta), s = std::sin(theta);
    Eigen::Matrix2d R;
    R << c, -s, s, c;
    return R;
  }
};

struct PlanarTwist {
  double rho_x = 0.0;
  double rho_y = 0.0;
  double omega = 0.0;

  // rotation weighted by the characteristic length L
  double weighted_norm(double L = kYawLength) const {
    return std::sqrt(rho_x * rho_x + rho_y * rho_y + L * L * omega * omega);
  }
};

inline PlanarPose compose(const PlanarPose& a, const PlanarPose& b) {
  const double c = std::cos(a.theta), s = std::sin(a.theta);
  return {a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y, a.theta + b.theta};
}

inline PlanarPose inverse(const PlanarPose& p) {
  const double c = std::cos(p.theta), s = std::sin(p.theta);
  return {-(c * p.x + s * p.y), -(-s * p.x + c * p.y), -p.theta};
}

// exp: twist -> pose. Translation goes through the closed-form SE(2) V matrix.
inline PlanarPose exp_se2(const PlanarTwist& t) {
  const double w = t.omega;
  double v11, v12;  // V = [v11 -v12; v12 v11]
  if (std::abs(w) < 1e-9) {
    // series: sin(w)/w ~ 1 - w^2/6, (1-cos(w))/w ~ w/2
    v11 = 1.0 - w * w / 6.0;
    v12 = 0.5 * w;
  } else {
    v11 = std::sin(w) / w;
    v12 = (1.0 - std::cos(w)) / w;
  }
  return {v11 * t.rho_x - v12 * t.rho_y, v12 * t.rho_x + v11 * t.rho_y, w};
}

// log: pose -> twist. theta = -pi is the branch boundary; this implementation
// keeps omega = theta as stored (i.e. the -pi representative).
inline PlanarTwist log_se2(const PlanarPose& p) {
  const double w = p.theta;
  double v11, v12;
  if (std::abs(w) < 1e-9) {
    v11 = 1.0 - w * w / 6.0;
    v12 = 0.5 * w;
  } else {
    v11 = std::sin(w) / w;
    v12 = (1.0 - std::cos(w)) / w;
  }
  const double det = v11 * v11 + v12 * v12;
  return {(v11 * p.x + v12 * p.y) / det, (-v12 * p.x + v11 * p.y) / det, w};
}

}  // namespace solmplan
