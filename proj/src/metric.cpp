#include "solmplan/metric.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace solmplan {

Strategy strategy_from_string(const std::string& s) {
  if (s == "min") return Strategy::kMin;
  if (s == "n") return Strategy::kN;
  if (s == "max") return Strategy::kMax;
  throw std::invalid_argument("unknown strategy (expected min|n|max): " + s);
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kMin: return "min";
    case Strategy::kN: return "n";
    case Strategy::kMax: return "max";
  }
  return "?";
}

void MetricConfig::validate() const {
  if (!(w1 > 0.0 && w2 > 0.0)) throw std::invalid_argument("weights must be positive");
  if (std::abs(w1 + w2 - 1.0) > 1e-9) throw std::invalid_argument("weights must sum to 1");
  if (!(sigma_floor > 0.0)) throw std::invalid_argument("sigma_floor must be > 0");
}

LeastSquaresCore least_squares_core(const ObservationSet& obs, double sigma_floor) {
  if (obs.m < 3) throw std::invalid_argument("least_squares_core needs m >= 3");
  LeastSquaresCore core;

  // n = 3 makes the Gram route exact: sigma1 = sqrt(lambda_min(A'A))
  const Eigen::Matrix3d AtA = obs.A.transpose() * obs.A;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(AtA);
  core.sigma1 = std::sqrt(std::max(0.0, eig.eigenvalues()[0]));
  core.degenerate = core.sigma1 < sigma_floor;

  // truncated pseudo-inverse keeps the solve meaningful in degenerate cells
  const Eigen::Vector3d Atb = obs.A.transpose() * obs.b;
  Eigen::Vector3d inv_evals = Eigen::Vector3d::Zero();
  const double cutoff = std::max(1e-24, 1e-12 * eig.eigenvalues()[2]);
  for (int i = 0; i < 3; ++i)
    if (eig.eigenvalues()[i] > cutoff) inv_evals[i] = 1.0 / eig.eigenvalues()[i];
  core.dx_star = eig.eigenvectors() * inv_evals.asDiagonal() *
                 eig.eigenvectors().transpose() * Atb;
  core.r = obs.A * core.dx_star - obs.b;
  core.xi = core.degenerate
                ? std::numeric_limits<double>::infinity()
                : core.dx_star.norm() + core.r.norm() / core.sigma1;
  return core;
}

Eigen::Vector4d phi_top_eigs(const Eigen::MatrixX3d& A, const Eigen::VectorXd& b, double xi) {
  const auto m = A.rows();
  if (m <= 3) throw std::invalid_argument("phi_top_eigs needs m >= n + 1 = 4 rows");
  Eigen::MatrixX4d M(m, 4);
  M.leftCols<3>() = xi * A;
  M.col(3) = b;
  const Eigen::Matrix4d gram = M.transpose() * M;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(gram);
  Eigen::Vector4d lambda = eig.eigenvalues().reverse();  // descending
  return lambda.cwiseMax(0.0);
}

MetricResult evaluate(const ObservationSet& obs, const MetricConfig& cfg) {
  cfg.validate();
  MetricResult res;
  if (obs.m < 4) {
    res.degenerate = true;
    res.q = std::numeric_limits<double>::infinity();
    return res;
  }
  const LeastSquaresCore core = least_squares_core(obs, cfg.sigma_floor);
  res.sigma1 = core.sigma1;
  res.xi = core.xi;
  if (core.degenerate) {
    res.degenerate = true;
    res.q = std::numeric_limits<double>::infinity();
    return res;
  }
  res.lambda_top = phi_top_eigs(obs.A, obs.b, core.xi);
  switch (cfg.strategy) {
    case Strategy::kMin:
      res.q = std::sqrt(cfg.w2) / core.sigma1;
      break;
    case Strategy::kN:
      // n-th largest eigenvalue of Phi, n = 3
      res.q = std::sqrt(cfg.w1 * res.lambda_top[2] + cfg.w2) / core.sigma1;
      break;
    case Strategy::kMax:
      res.q = std::sqrt(cfg.w1 * res.lambda_top[0] + cfg.w2) / core.sigma1;
      break;
  }
  return res;
}

double directional_bound_sensitivity(const Eigen::Vector2d& W_diag, const Eigen::Vector2d& beta) {
  if (!(W_diag[0] > 0.0 && W_diag[1] > 0.0))
    throw std::invalid_argument("W must be diagonal positive");
  if (std::abs(beta.norm() - 1.0) > 1e-9) throw std::invalid_argument("beta must be unit length");
  return std::sqrt(W_diag[0] * beta[0] * beta[0] + W_diag[1] * beta[1] * beta[1]);
}

}  // namespace solmplan
