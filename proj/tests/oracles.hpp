#pragma once

// Test-only reference implementations, kept independent of the library code
// paths they check.

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "solmplan/rng.hpp"
#include "solmplan/scene.hpp"

namespace oracles {

// distance from a point to a triangle (exact, region-based)
inline double point_triangle_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                      const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  const Eigen::Vector3d ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return (p - a).norm();
  const Eigen::Vector3d bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return (p - b).norm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return (p - (a + (d1 / (d1 - d3)) * ab)).norm();
  const Eigen::Vector3d cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return (p - c).norm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return (p - (a + (d2 / (d2 - d6)) * ac)).norm();
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return (p - (b + w * (c - b))).norm();
  }
  const double denom = 1.0 / (va + vb + vc);
  return (p - (a + (vb * denom) * ab + (vc * denom) * ac)).norm();
}

// brute-force nearest ray-triangle hit over every triangle
inline std::optional<std::pair<double, int>> brute_force_ray(
    const solmplan::TriangleMesh& mesh, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
    double max_dist) {
  const Eigen::Vector3d d = dir.normalized();
  double best = max_dist;
  int best_tri = -1;
  for (std::size_t tri = 0; tri < mesh.triangles.size(); ++tri) {
    const auto& f = mesh.triangles[tri];
    const Eigen::Vector3d& v0 = mesh.vertices[f[0]];
    const Eigen::Vector3d e1 = mesh.vertices[f[1]] - v0;
    const Eigen::Vector3d e2 = mesh.vertices[f[2]] - v0;
    const Eigen::Vector3d n = e1.cross(e2);
    const double denom = n.dot(d);
    if (std::abs(denom) < 1e-14) continue;
    const double t = n.dot(v0 - origin) / denom;
    if (t <= 1e-12 || t >= best) continue;
    // barycentric containment
    const Eigen::Vector3d hit = origin + t * d;
    const Eigen::Vector3d w = hit - v0;
    const double d00 = e1.dot(e1), d01 = e1.dot(e2), d11 = e2.dot(e2);
    const double dw0 = w.dot(e1), dw1 = w.dot(e2);
    const double det = d00 * d11 - d01 * d01;
    if (std::abs(det) < 1e-20) continue;
    const double u = (d11 * dw0 - d01 * dw1) / det;
    const double v = (d00 * dw1 - d01 * dw0) / det;
    if (u >= 0.0 && v >= 0.0 && u + v <= 1.0) {
      best = t;
      best_tri = static_cast<int>(tri);
    }
  }
  if (best_tri < 0) return std::nullopt;
  return std::make_pair(best, best_tri);
}

// triangle vs axis-aligned box via Sutherland-Hodgman clipping: clip the
// triangle against the six box half-spaces and see whether anything is left
inline bool triangle_box_clip_overlap(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                      const Eigen::Vector3d& c, const Eigen::Vector3d& lo,
                                      const Eigen::Vector3d& hi) {
  std::vector<Eigen::Vector3d> poly = {a, b, c};
  auto clip = [&poly](int axis, double bound, bool keep_below) {
    std::vector<Eigen::Vector3d> out;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Vector3d& p = poly[i];
      const Eigen::Vector3d& q = poly[(i + 1) % n];
      const double sp = keep_below ? bound - p[axis] : p[axis] - bound;
      const double sq = keep_below ? bound - q[axis] : q[axis] - bound;
      if (sp >= 0.0) out.push_back(p);
      if ((sp > 0.0 && sq < 0.0) || (sp < 0.0 && sq > 0.0)) {
        const double t = sp / (sp - sq);
        out.push_back(p + t * (q - p));
      }
    }
    poly = std::move(out);
  };
  for (int axis = 0; axis < 3 && !poly.empty(); ++axis) {
    clip(axis, hi[axis], true);
    if (poly.empty()) break;
    clip(axis, lo[axis], false);
  }
  return !poly.empty();
}

// central finite difference of a scalar function
template <typename F>
double central_diff(F&& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace oracles
