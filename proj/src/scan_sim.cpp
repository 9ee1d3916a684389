#include "solmplan/scan_sim.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "solmplan/rng.hpp"

namespace solmplan {

void LidarModel::validate() const {
  if (!(hfov_deg > 0.0 && hfov_deg <= 360.0)) throw std::invalid_argument("hfov must be in (0,360]");
  if (!(vfov_deg > 0.0 && vfov_deg <= 360.0)) throw std::invalid_argument("vfov must be in (0,360]");
  if (azimuth_count < 1 || elevation_count < 1)
    throw std::invalid_argument("ray counts must be >= 1");
  if (!(min_range >= 0.0 && min_range < max_range))
    throw std::invalid_argument("need 0 <= min_range < max_range");
  if (sigma_r < 0.0) throw std::invalid_argument("sigma_r must be >= 0");
}

LidarModel LidarModel::mid70_like() {
  LidarModel m;
  m.hfov_deg = 70.0;
  m.vfov_deg = 70.0;
  m.azimuth_count = 70;
  m.elevation_count = 48;
  m.max_range = 40.0;
  m.min_range = 0.05;
  m.sigma_r = 0.01;
  m.mount_height = 0.5;
  return m;
}

LidarModel LidarModel::spin360() {
  LidarModel m;
  m.hfov_deg = 360.0;
  m.vfov_deg = 50.0;
  m.azimuth_count = 360;
  m.elevation_count = 16;
  m.max_range = 40.0;
  m.min_range = 0.05;
  m.sigma_r = 0.01;
  m.mount_height = 0.5;
  return m;
}

LidarModel LidarModel::by_name(const std::string& name) {
  if (name == "mid70-like") return mid70_like();
  if (name == "spin-360") return spin360();
  throw std::invalid_argument("unknown LiDAR preset: " + name);
}

ScanSimulator::ScanSimulator(const TriangleMesh& mesh) : mesh_(&mesh) {
  const auto n = static_cast<int>(mesh.triangles.size());
  order_.resize(n);
  centroids_.resize(n);
  for (int i = 0; i < n; ++i) {
    order_[i] = i;
    const auto& t = mesh.triangles[i];
    centroids_[i] =
        (mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]) / 3.0;
  }
  nodes_.reserve(2 * n + 1);
  if (n > 0) root_ = build(0, n);
}

int ScanSimulator::build(int begin, int end) {
  Node node;
  node.lo = Eigen::Vector3d::Constant(1e300);
  node.hi = Eigen::Vector3d::Constant(-1e300);
  for (int i = begin; i < end; ++i) {
    const auto& t = mesh_->triangles[order_[i]];
    for (int k = 0; k < 3; ++k) {
      node.lo = node.lo.cwiseMin(mesh_->vertices[t[k]]);
      node.hi = node.hi.cwiseMax(mesh_->vertices[t[k]]);
    }
  }
  if (end - begin <= 4) {
    node.leaf = true;
    node.begin = begin;
    node.end = end;
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size()) - 1;
  }
  int axis = 0;
  (node.hi - node.lo).maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) { return centroids_[a][axis] < centroids_[b][axis]; });
  const int self = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  const int l = build(begin, mid);
  const int r = build(mid, end);
  nodes_[self].left = l;
  nodes_[self].right = r;
  return self;
}

bool ScanSimulator::intersect_triangle(int tri, const Eigen::Vector3d& o,
                                       const Eigen::Vector3d& d, double& t) const {
  // Moller-Trumbore
  const auto& f = mesh_->triangles[tri];
  const Eigen::Vector3d& v0 = mesh_->vertices[f[0]];
  const Eigen::Vector3d e1 = mesh_->vertices[f[1]] - v0;
  const Eigen::Vector3d e2 = mesh_->vertices[f[2]] - v0;
  const Eigen::Vector3d pvec = d.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) < 1e-14) return false;
  const double inv_det = 1.0 / det;
  const Eigen::Vector3d tvec = o - v0;
  const double u = tvec.dot(pvec) * inv_det;
  if (u < 0.0 || u > 1.0) return false;
  const Eigen::Vector3d qvec = tvec.cross(e1);
  const double v = d.dot(qvec) * inv_det;
  if (v < 0.0 || u + v > 1.0) return false;
  t = e2.dot(qvec) * inv_det;
  return t > 1e-12;
}

namespace {

// slab test against node bounds; axes with near-zero direction are handled
// by a containment check to avoid 0*inf
inline bool ray_box(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                    const Eigen::Vector3d& inv_d, const Eigen::Vector3d& lo,
                    const Eigen::Vector3d& hi, double t_max) {
  double t0 = 0.0, t1 = t_max;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < lo[a] || o[a] > hi[a]) return false;
      continue;
    }
    double ta = (lo[a] - o[a]) * inv_d[a];
    double tb = (hi[a] - o[a]) * inv_d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace

std::optional<RayHit> ScanSimulator::cast_ray(const Eigen::Vector3d& origin,
                                              const Eigen::Vector3d& direction,
                                              double max_dist) const {
  if (direction.squaredNorm() <= 0.0) throw std::invalid_argument("ray direction is zero");
  if (root_ < 0) return std::nullopt;
  const Eigen::Vector3d d = direction.normalized();
  const Eigen::Vector3d inv_d = d.cwiseInverse();  // IEEE inf on zero components is fine

  double best_t = max_dist;
  int best_tri = -1;
  int stack[64];
  int sp = 0;
  stack[sp++] = root_;
  while (sp > 0) {
    const Node& n = nodes_[stack[--sp]];
    if (!ray_box(origin, d, inv_d, n.lo, n.hi, best_t)) continue;
    if (n.leaf) {
      for (int i = n.begin; i < n.end; ++i) {
        double t;
        if (intersect_triangle(order_[i], origin, d, t) && t < best_t) {
          best_t = t;
          best_tri = order_[i];
        }
      }
    } else {
      stack[sp++] = n.left;
      stack[sp++] = n.right;
    }
  }
  if (best_tri < 0) return std::nullopt;
  return RayHit{best_t, best_tri};
}

Scan simulate_scan(const ScanSimulator& sim, const PlanarPose& pose, const LidarModel& model,
                   std::uint64_t seed) {
  model.validate();
  const double hfov = model.hfov_deg * kPi / 180.0;
  const double vfov = model.vfov_deg * kPi / 180.0;
  const Eigen::Vector3d origin(pose.x, pose.y, model.mount_height);
  const double cy = std::cos(pose.theta), sy = std::sin(pose.theta);

  Rng rng(mix64(seed, 0x7363616eULL));
  Scan scan;
  scan.points.reserve(static_cast<std::size_t>(model.azimuth_count) * model.elevation_count);

  for (int ei = 0; ei < model.elevation_count; ++ei) {
    const double el = -0.5 * vfov + (ei + 0.5) * vfov / model.elevation_count;
    const double ce = std::cos(el), se = std::sin(el);
    for (int ai = 0; ai < model.azimuth_count; ++ai) {
      const double az = -0.5 * hfov + (ai + 0.5) * hfov / model.azimuth_count;
      const Eigen::Vector3d dir_s(ce * std::cos(az), ce * std::sin(az), se);
      const Eigen::Vector3d dir_w(cy * dir_s.x() - sy * dir_s.y(),
                                  sy * dir_s.x() + cy * dir_s.y(), dir_s.z());
      const auto hit = sim.cast_ray(origin, dir_w, model.max_range);
      if (!hit || hit->distance < model.min_range) continue;
      double range = hit->distance;
      if (model.sigma_r > 0.0) {
        range = std::clamp(range + model.sigma_r * rng.normal(), model.min_range,
                           model.max_range + 6.0 * model.sigma_r);
      }
      scan.points.push_back(dir_s * range);
      scan.true_ranges.push_back(hit->distance);
      scan.triangle_ids.push_back(hit->triangle);
    }
  }
  return scan;
}

}  // namespace solmplan
