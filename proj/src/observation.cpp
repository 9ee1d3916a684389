#include "solmplan/observation.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace solmplan {

PlaneFit fit_plane(const std::vector<Eigen::Vector3d>& neighbors, double d_thresh) {
  PlaneFit fit;
  if (neighbors.size() < 3) return fit;

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : neighbors) centroid += p;
  centroid /= static_cast<double>(neighbors.size());

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : neighbors) {
    const Eigen::Vector3d d = p - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const Eigen::Vector3d evals = eig.eigenvalues();  // ascending
  // collinear / coincident neighborhoods have no usable normal
  if (evals[1] <= 1e-12 + 1e-9 * evals[2]) return fit;

  fit.normal = eig.eigenvectors().col(0);
  fit.anchor = centroid;
  fit.max_residual = 0.0;
  for (const auto& p : neighbors)
    fit.max_residual = std::max(fit.max_residual, std::abs(fit.normal.dot(p - centroid)));
  fit.valid = fit.max_residual <= d_thresh;
  return fit;
}

ObservationSet build_observations(const Scan& scan, const MapCloud& map, const PlanarPose& pose,
                                  const ObservationParams& params, double mount_height,
                                  const TriangleMesh* mesh) {
  if (scan.empty()) throw std::invalid_argument("scan is empty");
  if (params.association == Association::kMeshPlane && mesh == nullptr)
    throw std::invalid_argument("mesh-plane association needs the mesh");

  const double c = std::cos(pose.theta), s = std::sin(pose.theta);
  const Eigen::Vector3d sensor_origin(pose.x, pose.y, mount_height);

  ObservationSet obs;
  obs.pose = pose;
  obs.A.resize(static_cast<Eigen::Index>(scan.size()), 3);
  obs.b.resize(static_cast<Eigen::Index>(scan.size()));

  std::vector<int> idx;
  std::vector<Eigen::Vector3d> neighbors;
  int m = 0;
  for (std::size_t j = 0; j < scan.size(); ++j) {
    const Eigen::Vector3d& p = scan.points[j];
    const Eigen::Vector3d w(c * p.x() - s * p.y() + pose.x, s * p.x() + c * p.y() + pose.y,
                            p.z() + mount_height);

    Eigen::Vector3d u, q;
    if (params.association == Association::kKnnFit) {
      map.index.knn(w, params.k, idx);
      if (static_cast<int>(idx.size()) < params.k) continue;
      neighbors.clear();
      for (int id : idx) neighbors.push_back(map.points()[id]);
      const PlaneFit fit = fit_plane(neighbors, params.d_thresh);
      if (!fit.valid) continue;
      u = fit.normal;
      q = fit.anchor;
    } else {
      const auto& tri = mesh->triangles[scan.triangle_ids[j]];
      const Eigen::Vector3d& v0 = mesh->vertices[tri[0]];
      const Eigen::Vector3d n =
          (mesh->vertices[tri[1]] - v0).cross(mesh->vertices[tri[2]] - v0);
      if (n.squaredNorm() <= 0.0) continue;
      u = n.normalized();
      q = v0;
    }
    // orient toward the sensor so the residual sign convention is consistent
    if (u.dot(sensor_origin - q) < 0.0) u = -u;

    const double h = u.dot(w - q);
    // d(R(theta) p_xy)/dtheta = R'(theta) p_xy
    const double dx_dtheta = -s * p.x() - c * p.y();
    const double dy_dtheta = c * p.x() - s * p.y();
    obs.A(m, 0) = u.x();
    obs.A(m, 1) = u.y();
    obs.A(m, 2) = u.x() * dx_dtheta + u.y() * dy_dtheta;
    obs.b(m) = -h;
    ++m;
  }
  obs.A.conservativeResize(m, 3);
  obs.b.conservativeResize(m);
  obs.m = m;
  return obs;
}

}  // namespace solmplan
