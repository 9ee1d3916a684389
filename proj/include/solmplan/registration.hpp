#pragma once

#include <cstdint>
#include <vector>

#include "solmplan/observation.hpp"
#include "solmplan/scan_sim.hpp"
#include "solmplan/scene.hpp"
#include "solmplan/se2.hpp"

namespace solmplan {

struct RegistrationParams {
  int max_iterations = 30;
  double tol = 1e-6;  // step norm convergence threshold
  ObservationParams obs;
};

struct RegistrationResult {
  PlanarPose pose;
  int iterations = 0;
  bool converged = false;
};

// Iterated Gauss-Newton point-to-plane registration of one scan against the
// map, starting from init. Unobservable directions are truncated in the
// normal-equation solve, so they simply retain their initial error.
RegistrationResult register_scan(const Scan& scan, const MapCloud& map, const PlanarPose& init,
                                 const RegistrationParams& params, double mount_height,
                                 const TriangleMesh* mesh = nullptr);

struct MdeParams {
  int n = 50;            // number of disturbances
  double radius = 0.1;   // twist-ball radius (m, yaw weighted by kYawLength)
  std::uint64_t seed = 0;
  RegistrationParams registration;

  void validate() const;
};

// Mean Disturbance-induced Error at one pose: mean squared weighted twist
// norm of log(T_gt^-1 T_regi) over registrations started from poses disturbed
// uniformly in the twist ball. Deterministic given the seed; disturbance j
// draws from a stream keyed by (seed, j).
class MdeEvaluator {
 public:
  MdeEvaluator(const SceneModel& scene, const ScanSimulator& sim, const LidarModel& lidar,
               const MdeParams& params);

  double evaluate(const PlanarPose& pose) const;
  // per-disturbance squared errors, for CSV output
  double evaluate(const PlanarPose& pose, std::vector<double>& per_disturbance) const;

 private:
  const SceneModel* scene_;
  const ScanSimulator* sim_;
  LidarModel lidar_;
  MdeParams params_;
};

double mde(const SceneModel& scene, const ScanSimulator& sim, const PlanarPose& pose,
           const LidarModel& lidar, const MdeParams& params);

}  // namespace solmplan
