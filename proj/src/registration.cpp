#include "solmplan/registration.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "solmplan/rng.hpp"

namespace solmplan {

RegistrationResult register_scan(const Scan& scan, const MapCloud& map, const PlanarPose& init,
                                 const RegistrationParams& params, double mount_height,
                                 const TriangleMesh* mesh) {
  if (scan.empty()) throw std::invalid_argument("cannot register an empty scan");

  RegistrationResult result;
  result.pose = init;
  for (int it = 0; it < params.max_iterations; ++it) {
    const ObservationSet obs =
        build_observations(scan, map, result.pose, params.obs, mount_height, mesh);
    if (obs.m < 3) {
      result.iterations = it;
      result.converged = false;
      return result;
    }
    const Eigen::Matrix3d AtA = obs.A.transpose() * obs.A;
    const Eigen::Vector3d Atb = obs.A.transpose() * obs.b;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(AtA);
    // truncate unobservable directions instead of chasing them
    Eigen::Vector3d inv = Eigen::Vector3d::Zero();
    const double cutoff = std::max(1e-12, 1e-6 * eig.eigenvalues()[2]);
    for (int i = 0; i < 3; ++i)
      if (eig.eigenvalues()[i] > cutoff) inv[i] = 1.0 / eig.eigenvalues()[i];
    const Eigen::Vector3d step =
        eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose() * Atb;

    result.pose = PlanarPose(result.pose.x + step.x(), result.pose.y + step.y(),
                             result.pose.theta + step.z());
    result.iterations = it + 1;
    if (step.norm() < params.tol) {
      result.converged = true;
      return result;
    }
  }
  result.converged = false;
  return result;
}

void MdeParams::validate() const {
  if (n < 1) throw std::invalid_argument("disturbance count must be >= 1");
  if (radius < 0.0) throw std::invalid_argument("disturbance radius must be >= 0");
}

MdeEvaluator::MdeEvaluator(const SceneModel& scene, const ScanSimulator& sim,
                           const LidarModel& lidar, const MdeParams& params)
    : scene_(&scene), sim_(&sim), lidar_(lidar), params_(params) {
  params_.validate();
}

namespace {

// uniform direction on the sphere x uniform radius; yaw weighted by kYawLength
PlanarTwist sample_twist(std::uint64_t seed, std::uint64_t j, double radius) {
  Rng rng(mix64(seed, mix64(0x6d6465ULL, j)));
  Eigen::Vector3d dir(rng.normal(), rng.normal(), rng.normal());
  while (dir.norm() < 1e-12) dir = {rng.normal(), rng.normal(), rng.normal()};
  dir.normalize();
  const double rho = radius * rng.uniform();
  return {rho * dir.x(), rho * dir.y(), rho * dir.z() / kYawLength};
}

}  // namespace

double MdeEvaluator::evaluate(const PlanarPose& pose, std::vector<double>& per_disturbance) const {
  per_disturbance.assign(params_.n, 0.0);
  const Scan scan = simulate_scan(*sim_, pose, lidar_, mix64(params_.seed, 0x7363ULL));
  if (scan.empty()) throw std::runtime_error("no scan returns at the evaluation pose");

  double sum = 0.0;
  for (int j = 0; j < params_.n; ++j) {
    const PlanarTwist twist = sample_twist(params_.seed, static_cast<std::uint64_t>(j),
                                           params_.radius);
    const PlanarPose disturbed = compose(pose, exp_se2(twist));
    const RegistrationResult reg = register_scan(scan, scene_->map, disturbed,
                                                 params_.registration, lidar_.mount_height,
                                                 &scene_->mesh);
    const PlanarTwist err = log_se2(compose(inverse(pose), reg.pose));
    const double e = err.weighted_norm();
    per_disturbance[j] = e * e;
    sum += e * e;
  }
  return sum / params_.n;
}

double MdeEvaluator::evaluate(const PlanarPose& pose) const {
  std::vector<double> scratch;
  return evaluate(pose, scratch);
}

double mde(const SceneModel& scene, const ScanSimulator& sim, const PlanarPose& pose,
           const LidarModel& lidar, const MdeParams& params) {
  return MdeEvaluator(scene, sim, lidar, params).evaluate(pose);
}

}  // namespace solmplan
