#pragma once

#include <Eigen/Core>
#include <string>

#include "solmplan/observation.hpp"

namespace solmplan {

enum class Strategy { kMin, kN, kMax };

Strategy strategy_from_string(const std::string& s);
std::string to_string(Strategy s);

struct MetricConfig {
  double w1 = 0.5;
  double w2 = 0.5;
  Strategy strategy = Strategy::kN;
  double sigma_floor = 1e-6;  // below this smallest singular value the pose is degenerate

  void validate() const;
};

struct LeastSquaresCore {
  Eigen::Vector3d dx_star = Eigen::Vector3d::Zero();
  Eigen::VectorXd r;
  double sigma1 = 0.0;  // smallest singular value of A
  double xi = 0.0;      // ||dx*|| + ||r|| / sigma1
  bool degenerate = false;
};

struct MetricResult {
  double q = 0.0;
  double sigma1 = 0.0;
  double xi = 0.0;
  Eigen::Vector4d lambda_top = Eigen::Vector4d::Zero();  // top n+1 eigenvalues, descending
  bool degenerate = false;
};

// Solves the 3-column least-squares problem and the sensitivity scalars.
// Throws for m < 3. sigma1 below the floor sets the degenerate flag.
LeastSquaresCore least_squares_core(const ObservationSet& obs, double sigma_floor = 1e-6);

// Top n+1 eigenvalues of Phi = xi^2 A A' + b b', descending, computed from
// the (n+1)x(n+1) Gram matrix of M = [xi*A | b]; the remaining m-n-1
// eigenvalues are analytically zero. Throws for m <= n.
Eigen::Vector4d phi_top_eigs(const Eigen::MatrixX3d& A, const Eigen::VectorXd& b, double xi);

// Observation loss under the chosen strategy. Degenerate observations
// (sigma1 below the floor, or fewer than n+1 rows) produce q = +inf.
MetricResult evaluate(const ObservationSet& obs, const MetricConfig& cfg);

// Directional derivative magnitude of the bound sqrt(dt' W dt) at zero for a
// unit direction beta; W is a diagonal positive 2x2 weight.
double directional_bound_sensitivity(const Eigen::Vector2d& W_diag, const Eigen::Vector2d& beta);

}  // namespace solmplan
